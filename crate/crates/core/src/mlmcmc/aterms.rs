//! Indicator splitting of a cross-level posterior difference into bounded terms.

/// `𝓘_ℓ = 1{Φ_ℓ ≤ Φ_{ℓ−1}}`.
pub fn indicator(phi_fine: f64, phi_coarse: f64) -> bool {
    phi_fine <= phi_coarse
}

/// `A1..A8` for one state. Index `i` holds `A^{(i+1)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ATerms {
    pub indicator: bool,
    pub a: [f64; 8],
}

/// Evaluates the eight terms from the fine/coarse potentials and the QoI
/// difference `Δφ = φ_{ℓ'} − φ_{ℓ'−1}` (with `φ_{−1} = 0`).
///
/// Every exponential is taken of a non-positive argument on the event where
/// it is not multiplied by zero, so nothing overflows.
pub fn a_terms(phi_fine: f64, phi_coarse: f64, dphi: f64) -> ATerms {
    let ind = indicator(phi_fine, phi_coarse);
    let mut a = [0.0; 8];
    if ind {
        // Φ_ℓ − Φ_{ℓ−1} ≤ 0
        let e = (phi_fine - phi_coarse).exp();
        a[0] = (1.0 - e) * dphi;
        a[2] = e - 1.0;
        a[3] = dphi;
        a[5] = e * dphi;
    } else {
        // Φ_{ℓ−1} − Φ_ℓ < 0
        let e = (phi_coarse - phi_fine).exp();
        a[1] = (e - 1.0) * dphi;
        a[4] = 1.0 - e;
        a[6] = dphi;
        a[7] = e * dphi;
    }
    ATerms { indicator: ind, a }
}

/// Expectations needed to assemble one correction block: `E^ℓ` of A1, A3,
/// A6+A7 and `E^{ℓ−1}` of A2, A5, A4+A8.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockMeans {
    pub fine_a1: f64,
    pub fine_a3: f64,
    pub fine_a67: f64,
    pub coarse_a2: f64,
    pub coarse_a5: f64,
    pub coarse_a48: f64,
}

impl BlockMeans {
    /// `E^ℓ(A1) + E^{ℓ−1}(A2) + E^ℓ(A3)·E^{ℓ−1}(A4+A8) + E^{ℓ−1}(A5)·E^ℓ(A6+A7)`.
    pub fn combine(&self) -> f64 {
        self.fine_a1 + self.coarse_a2 + self.fine_a3 * self.coarse_a48 + self.coarse_a5 * self.fine_a67
    }
}

/// Functionals recorded by a chain targeting level `ℓ` of a correction block.
pub const FINE_WIDTH: usize = 3;
pub fn fine_functionals(t: &ATerms, out: &mut [f64]) {
    out[0] = t.a[0];
    out[1] = t.a[2];
    out[2] = t.a[5] + t.a[6];
}

/// Functionals recorded by a chain targeting level `ℓ−1` of a correction block.
pub const COARSE_WIDTH: usize = 3;
pub fn coarse_functionals(t: &ATerms, out: &mut [f64]) {
    out[0] = t.a[1];
    out[1] = t.a[4];
    out[2] = t.a[3] + t.a[7];
}
