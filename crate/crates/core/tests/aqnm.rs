use num_complex::Complex64;
use qmimo::quantizer::{measure_aqnm_statistics, quantize_stream, QuantizerSpec};
use qmimo::rng::{stream_rng, Stream};
use rand_distr::{Distribution, StandardNormal};

#[test]
fn one_bit_distortion_matches_table() {
    let spec = QuantizerSpec::lloyd_max(1).unwrap();
    let s = measure_aqnm_statistics(&spec, 1_000_000, 5).unwrap();
    assert!((s.empirical_rho - 0.3634).abs() < 0.005);
    assert!(s.correlation_nq_y < 3e-3);
}

#[test]
fn stream_quantizer_agrees_with_gain_model() {
    let spec = QuantizerSpec::lloyd_max(2).unwrap();
    let var = 4.0;
    let mut rng = stream_rng(3, Stream::Validation, 0);
    let y: Vec<Complex64> = (0..200_000)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * (var / 2.0f64).sqrt()
        })
        .collect();
    let q = quantize_stream(&y, &spec, var).unwrap();
    let cross: Complex64 = q.iter().zip(&y).map(|(a, b)| a * b.conj()).sum();
    let power: f64 = y.iter().map(|v| v.norm_sqr()).sum();
    // E[Q(y) y*] = alpha E|y|^2 for the MMSE quantizer.
    assert!((cross.re / power - spec.alpha()).abs() < 0.01);
}
