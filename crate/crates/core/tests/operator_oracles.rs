use hylleraas::basis::{enumerate_basis, BasisTerm};
use hylleraas::oracles::{cartesian_probe, ElectronConfiguration, Probe};

fn points() -> Vec<ElectronConfiguration> {
    ElectronConfiguration::sample(100, 2024, 2.5, 0.25)
}

fn terms() -> Vec<BasisTerm> {
    enumerate_basis(22).unwrap()
}

fn worst(probe: Probe, pts: &[ElectronConfiguration]) -> f64 {
    cartesian_probe(probe, pts).iter().map(|v| v.relative_deviation()).fold(0.0, f64::max)
}

#[test]
fn attraction_and_overlap_match_direct_evaluation() {
    let pts = points();
    for &i in &terms() {
        for &j in &terms()[..6] {
            assert!(worst(Probe::Overlap(i, j), &pts) <= 1e-12, "{i:?} {j:?}");
            assert!(worst(Probe::Potential(i, j, 2), &pts) <= 1e-12, "{i:?} {j:?}");
        }
    }
}

#[test]
fn laplacian_matches_stencil() {
    let pts = points();
    for &i in &terms() {
        let w = worst(Probe::Laplacian(i), &pts);
        assert!(w <= 1e-6, "{i:?}: {w:e}");
    }
}

#[test]
fn relative_gradient_matches_difference() {
    let pts = points();
    for &i in &terms() {
        let w = worst(Probe::RelativeGradient(i), &pts);
        assert!(w <= 1e-8, "{i:?}: {w:e}");
    }
}

#[test]
fn gradient_products_match_difference() {
    let pts = points();
    let t = terms();
    for &i in &t[..8] {
        for &j in &t[..8] {
            let k = worst(Probe::Kinetic(i, j), &pts);
            let m = worst(Probe::MassPolarization(i, j), &pts);
            assert!(k <= 1e-8 && m <= 1e-8, "{i:?} {j:?}: {k:e} {m:e}");
        }
    }
}
