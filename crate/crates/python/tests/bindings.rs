use pmebusy::{pme_lt, pme_moment, pme_pdf, pme_sample, pme_tail_lt_deriv_at_zero, tail_index_estimate};

#[test]
fn plain_value_functions() {
    assert!((pme_lt(2.0, 1.0).unwrap() - 3f64.ln() / 2.0).abs() < 1e-12);
    assert_eq!(pme_moment(3.0, 3).unwrap(), f64::INFINITY);
    assert_eq!(pme_tail_lt_deriv_at_zero(2.0, 1).unwrap(), f64::NEG_INFINITY);
    assert!(pme_pdf(1.0, 1.0).is_err());
}

#[test]
fn seeded_samples_repeat() {
    let a = pme_sample(1.5, 50_000, 4).unwrap();
    assert_eq!(a, pme_sample(1.5, 50_000, 4).unwrap());
    let idx = tail_index_estimate(a, 200).unwrap();
    assert!((1.0..2.2).contains(&idx), "{idx}");
}
