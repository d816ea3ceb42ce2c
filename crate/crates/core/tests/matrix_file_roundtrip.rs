use proptest::prelude::*;

use smoothed_lab::cli::matrix_file::{
    format_matrix, parse_matrix_text, read_matrix_file, write_matrix_file,
};
use smoothed_lab::Matrix;

fn finite() -> impl Strategy<Value = f64> {
    any::<u64>()
        .prop_map(f64::from_bits)
        .prop_filter("finite", |v| v.is_finite())
}

fn matrix() -> impl Strategy<Value = Matrix> {
    (1usize..8, 1usize..8).prop_flat_map(|(r, c)| {
        proptest::collection::vec(finite(), r * c).prop_map(move |d| Matrix::new(r, c, d).unwrap())
    })
}

proptest! {
    #[test]
    fn text_round_trip_is_bitwise(m in matrix()) {
        let back = parse_matrix_text(&format_matrix(&m)).unwrap();
        prop_assert_eq!(back.rows(), m.rows());
        prop_assert_eq!(back.cols(), m.cols());
        for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn comments_do_not_change_the_matrix(m in matrix(), at in 0usize..10) {
        let text = format_matrix(&m);
        let mut lines: Vec<&str> = text.lines().collect();
        let at = at.min(lines.len());
        lines.insert(at, "# note");
        lines.insert(at, "");
        prop_assert_eq!(parse_matrix_text(&lines.join("\n")).unwrap(), m);
    }
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.txt");
    let m = Matrix::from_rows(&[[0.1, -2.5e-300, 7.0], [1.0 / 3.0, -0.0, 1e300]]).unwrap();
    write_matrix_file(&m, &p).unwrap();
    let back = read_matrix_file(&p).unwrap();
    assert!(m
        .as_slice()
        .iter()
        .zip(back.as_slice())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}
