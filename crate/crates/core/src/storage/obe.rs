//! Per-node atomic models for the time-domain solver.

use num_complex::Complex64;

use crate::params::MediumParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Atomic equations of motion at a single z node.
pub(crate) trait AtomModel: Sync {
    /// Number of complex state entries per node.
    fn stride(&self) -> usize;
    fn init(&self, s: &mut [Complex64]);
    /// Optical coherence driving the probe field.
    fn probe_coherence(&self, s: &[Complex64]) -> Complex64;
    /// Ground-state (spin) coherence.
    fn spin_coherence(&self, s: &[Complex64]) -> Complex64;
    fn deriv(&self, s: &[Complex64], probe: Complex64, control: f64, out: &mut [Complex64]);
    /// Exact free evolution over `h` with both fields off; the spin
    /// coherence is further multiplied by `spin_factor`.
    fn hold(&self, s: &mut [Complex64], h: f64, spin_factor: f64);
    /// Trace of the density matrix, when the model carries populations.
    fn trace(&self, _s: &[Complex64]) -> Option<f64> {
        None
    }
}

/// First-order (weak-probe) equations for σ31 and σ21.
pub(crate) struct WeakProbe {
    pub delta_p: f64,
    pub delta_2: f64,
    pub gamma31: f64,
    pub gamma21: f64,
}

impl WeakProbe {
    pub fn new(medium: &MediumParams, delta_p: f64, delta_c: f64) -> Self {
        WeakProbe {
            delta_p,
            delta_2: delta_p - delta_c,
            gamma31: medium.gamma31,
            gamma21: medium.gamma21,
        }
    }
}

impl AtomModel for WeakProbe {
    fn stride(&self) -> usize {
        2
    }

    fn init(&self, s: &mut [Complex64]) {
        s.fill(ZERO);
    }

    fn probe_coherence(&self, s: &[Complex64]) -> Complex64 {
        s[0]
    }

    fn spin_coherence(&self, s: &[Complex64]) -> Complex64 {
        s[1]
    }

    fn deriv(&self, s: &[Complex64], probe: Complex64, control: f64, out: &mut [Complex64]) {
        let half_c = 0.5 * control;
        out[0] = (I * self.delta_p - self.gamma31) * s[0] + I * (half_c * s[1] + 0.5 * probe);
        out[1] = (I * self.delta_2 - self.gamma21) * s[1] + I * half_c * s[0];
    }

    fn hold(&self, s: &mut [Complex64], h: f64, spin_factor: f64) {
        s[0] *= ((I * self.delta_p - self.gamma31) * h).exp();
        s[1] *= ((I * self.delta_2 - self.gamma21) * h).exp() * spin_factor;
    }
}

/// Full three-level density matrix, row-major over (|1>, |2>, |3>).
///
/// H = −δp|3><3| − δ2|2><2| − ½(Ω_p|3><1| + Ω_c|3><2| + h.c.) in the
/// rotating frame; |3> decays to |1> and |2> with rates Γ31 and Γ32.
pub(crate) struct FullObe {
    pub delta_p: f64,
    pub delta_2: f64,
    pub gamma21: f64,
    pub gamma31: f64,
    pub gamma32: f64,
    pub branch31: f64,
    pub branch32: f64,
}

impl FullObe {
    pub fn new(medium: &MediumParams, delta_p: f64, delta_c: f64) -> Self {
        FullObe {
            delta_p,
            delta_2: delta_p - delta_c,
            gamma21: medium.gamma21,
            gamma31: medium.gamma31,
            gamma32: medium.gamma32,
            branch31: medium.branch31,
            branch32: medium.branch32,
        }
    }

    fn energies(&self) -> [f64; 3] {
        [0.0, -self.delta_2, -self.delta_p]
    }

    fn coherence_decay(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 1) => self.gamma21,
            (0, 2) => self.gamma31,
            (1, 2) => self.gamma32,
            _ => 0.0,
        }
    }
}

impl AtomModel for FullObe {
    fn stride(&self) -> usize {
        9
    }

    fn init(&self, s: &mut [Complex64]) {
        s.fill(ZERO);
        s[0] = Complex64::new(1.0, 0.0);
    }

    fn probe_coherence(&self, s: &[Complex64]) -> Complex64 {
        s[6]
    }

    fn spin_coherence(&self, s: &[Complex64]) -> Complex64 {
        s[3]
    }

    fn deriv(&self, s: &[Complex64], probe: Complex64, control: f64, out: &mut [Complex64]) {
        let e = self.energies();
        let mut h = [ZERO; 9];
        h[0] = Complex64::new(e[0], 0.0);
        h[4] = Complex64::new(e[1], 0.0);
        h[8] = Complex64::new(e[2], 0.0);
        h[6] = -0.5 * probe;
        h[2] = -0.5 * probe.conj();
        h[7] = Complex64::new(-0.5 * control, 0.0);
        h[5] = Complex64::new(-0.5 * control, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let mut comm = ZERO;
                for k in 0..3 {
                    comm += h[3 * i + k] * s[3 * k + j] - s[3 * i + k] * h[3 * k + j];
                }
                out[3 * i + j] = -I * comm - self.coherence_decay(i, j) * s[3 * i + j];
            }
        }
        let p3 = s[8];
        out[8] -= (self.branch31 + self.branch32) * p3;
        out[0] += self.branch31 * p3;
        out[4] += self.branch32 * p3;
    }

    fn hold(&self, s: &mut [Complex64], h: f64, spin_factor: f64) {
        let e = self.energies();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let rate = Complex64::new(-self.coherence_decay(i, j), -(e[i] - e[j]));
                    s[3 * i + j] *= (rate * h).exp();
                }
            }
        }
        s[3] *= spin_factor;
        s[1] *= spin_factor;
        let g3 = self.branch31 + self.branch32;
        if g3 > 0.0 {
            let p3 = s[8].re;
            let left = p3 * (-g3 * h).exp();
            let lost = p3 - left;
            s[8] = Complex64::new(left, 0.0);
            s[0] += self.branch31 / g3 * lost;
            s[4] += self.branch32 / g3 * lost;
        }
    }

    fn trace(&self, s: &[Complex64]) -> Option<f64> {
        Some((s[0] + s[4] + s[8]).re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium() -> MediumParams {
        MediumParams::lambda(10.0, 0.01, 0.5)
    }

    #[test]
    fn full_reduces_to_weak_at_first_order() {
        let m = medium();
        let weak = WeakProbe::new(&m, 0.2, 0.05);
        let full = FullObe::new(&m, 0.2, 0.05);
        let mut sf = [ZERO; 9];
        full.init(&mut sf);
        let coh31 = Complex64::new(0.01, -0.02);
        let coh21 = Complex64::new(-0.03, 0.01);
        sf[6] = coh31;
        sf[2] = coh31.conj();
        sf[3] = coh21;
        sf[1] = coh21.conj();
        let sw = [coh31, coh21];
        let probe = Complex64::new(1e-6, 0.0);
        let mut df = [ZERO; 9];
        let mut dw = [ZERO; 2];
        full.deriv(&sf, probe, 1.3, &mut df);
        weak.deriv(&sw, probe, 1.3, &mut dw);
        // The full model carries second-order terms in the coherences.
        assert!((df[6] - dw[0]).norm() < 1e-3);
        assert!((df[3] - dw[1]).norm() < 1e-3);
    }

    #[test]
    fn trace_derivative_vanishes() {
        let m = medium();
        let full = FullObe::new(&m, 0.3, -0.1);
        let mut s = [ZERO; 9];
        full.init(&mut s);
        s[0] = Complex64::new(0.7, 0.0);
        s[4] = Complex64::new(0.2, 0.0);
        s[8] = Complex64::new(0.1, 0.0);
        s[6] = Complex64::new(0.05, 0.02);
        s[2] = s[6].conj();
        let mut d = [ZERO; 9];
        full.deriv(&s, Complex64::new(0.4, 0.1), 2.0, &mut d);
        assert!((d[0] + d[4] + d[8]).norm() < 1e-15);
    }

    #[test]
    fn hold_matches_integration() {
        let m = medium();
        let weak = WeakProbe::new(&m, 0.0, 0.2);
        let mut a = [Complex64::new(0.1, 0.0), Complex64::new(0.5, 0.1)];
        let mut b = a;
        weak.hold(&mut a, 3.0, 1.0);
        let n = 30_000;
        let dt = 3.0 / n as f64;
        for _ in 0..n {
            let mut d = [ZERO; 2];
            weak.deriv(&b, ZERO, 0.0, &mut d);
            b[0] += d[0] * dt;
            b[1] += d[1] * dt;
        }
        assert!((a[1] - b[1]).norm() < 1e-4);
    }
}
