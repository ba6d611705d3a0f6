//! Special functions against 25-digit reference values (tests/data).

use emission_bounds::special::{bessel_j_halves, bessel_jn, sine_integral, spherical_jn};

#[test]
fn special_functions_match_reference_table() {
    let text = include_str!("data/special_reference.csv");
    let mut worst: (f64, String) = (0.0, String::new());
    let mut count = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let order: i64 = f[1].parse().unwrap();
        let x: f64 = f[2].parse().unwrap();
        let want: f64 = f[3].parse().unwrap();
        let (got, envelope) = match f[0] {
            "J" => (bessel_jn(order as i32, x), 1.0 / x.max(1.0).sqrt()),
            "Jhalf" => (bessel_j_halves(order as i32, x), 1.0 / x.max(1.0).sqrt()),
            "sj" => (spherical_jn(order as usize, x), 1.0 / x.max(1.0)),
            "Si" => (sine_integral(x), 1.0),
            other => panic!("unknown function {other}"),
        };
        // Relative accuracy away from zeros, absolute accuracy on the scale
        // of the oscillation envelope near them.
        let score = (got - want).abs() / (1e-10 * want.abs() + 1e-13 * envelope);
        if score > worst.0 {
            worst = (score, line.to_string());
        }
        count += 1;
    }
    assert_eq!(count, 540);
    assert!(worst.0 <= 1.0, "worst case {} at {}", worst.0, worst.1);
}
