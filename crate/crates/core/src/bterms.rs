//! Second-order correction terms for the coverage of the Wald-type region.
//!
//! With `K = {V(Σ̂) − V(Σ)} V(Σ)⁻¹`, the three moments
//! `B₁ = E[tr(K)²]`, `B₂ = tr E[K²]` and `B₃ = tr E[K]` are all `O(n⁻¹)`.
//! For the bias-corrected moment estimator they have plug-in approximations
//! (`B*`) built from `D_i = Σ + S_i` and `U_ijk = D_i⁻¹ D_j D_k⁻¹`:
//!
//! ```text
//! B₁* = 2/n² Σ_ijk tr(V U_jik V U_kij)
//! B₂* = 1/n² Σ_i tr{(Σ_j U_jij V)²} + 1/n² Σ_ijk tr(V U_jik) tr(V U_kij)
//! B₃* = B₂* − 1/n² Σ_ij tr(V U_iji D_j D_i⁻¹) − 1/n² Σ_ij tr(D_i⁻¹ D_j) tr(V U_iji)
//! ```
//!
//! The triple sums collapse: `tr(V U_jik V U_kij) = tr(W_j D_i W_k D_i)` with
//! `W_j = D_j⁻¹ V D_j⁻¹`, and `tr(V U_jik)` is linear in the three entries of
//! `D_i`, so its squared sum is a quadratic form in those entries. Evaluation
//! is `O(n²)`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{Mat2, Sym2};
use crate::study::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BTerms {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl BTerms {
    pub const ZERO: BTerms = BTerms { b1: 0.0, b2: 0.0, b3: 0.0 };

    pub fn new(b1: f64, b2: f64, b3: f64) -> Self {
        BTerms { b1, b2, b3 }
    }

    /// Homogeneous-design values `(4/n, 6/n, 0)`, reached when every `D_i`
    /// coincides.
    pub fn homogeneous(n: usize) -> Self {
        let n = n as f64;
        BTerms::new(4.0 / n, 6.0 / n, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.b1.is_finite() && self.b2.is_finite() && self.b3.is_finite()
    }

    /// Coefficient of `f_{k+2}(x)` in the coverage expansion.
    pub fn first_order_coef(&self) -> f64 {
        self.b1 / 4.0 - self.b2 / 2.0 + 2.0 * self.b3
    }

    /// Coefficient of `−f_{k+4}(x)` in the coverage expansion.
    pub fn second_order_coef(&self) -> f64 {
        self.b1 / 4.0 + self.b2 / 2.0
    }
}

/// `B*` terms evaluated at `sigma` for the within-study covariances of `d`.
pub fn b_star(d: &Dataset, sigma: &Sym2) -> Result<BTerms> {
    let within: Vec<Sym2> = d.within_covs().collect();
    b_star_from_within(&within, sigma)
}

pub fn b_star_from_within(within: &[Sym2], sigma: &Sym2) -> Result<BTerms> {
    d_require_nonempty(within)?;
    let n = within.len() as f64;
    let ds: Vec<Sym2> = within.iter().map(|s| *sigma + *s).collect();
    let ps: Vec<Sym2> = ds.iter().map(Sym2::inverse).collect::<Result<_>>()?;
    let v = ps.iter().copied().sum::<Sym2>().inverse()?;
    let vm = v.to_mat();

    // B₁*
    let w: Mat2 = ps.iter().map(|p| *p * vm * *p).sum();
    let b1_sum: f64 = ds
        .iter()
        .map(|d| {
            let wd = w * *d;
            wd.trace_of_product(&wd)
        })
        .sum();
    let b1 = 2.0 * b1_sum / (n * n);

    // B₂*, first term: Σ_i tr{(Σ_j P_j D_i P_j V)²}
    let b2_first: f64 = ds
        .iter()
        .map(|d| {
            let m = ps.iter().map(|p| *p * *d * *p).sum::<Mat2>() * vm;
            m.trace_of_product(&m)
        })
        .sum();

    // B₂*, second term: Σ_i Σ_jk tr(G_jk D_i)², G_jk = P_k V P_j
    let mut gram = [[0.0f64; 3]; 3];
    for pj in &ps {
        let vpj = vm * *pj;
        for pk in &ps {
            let g = (*pk * vpj).m;
            let c = [g[0][0], g[0][1] + g[1][0], g[1][1]];
            for r in 0..3 {
                for s in 0..3 {
                    gram[r][s] += c[r] * c[s];
                }
            }
        }
    }
    let b2_second: f64 = ds
        .iter()
        .map(|d| {
            let e = [d.a11, d.a12, d.a22];
            (0..3).map(|r| (0..3).map(|s| e[r] * gram[r][s] * e[s]).sum::<f64>()).sum::<f64>()
        })
        .sum();
    let b2 = (b2_first + b2_second) / (n * n);

    // B₃*
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for pi in &ps {
        for dj in &ds {
            let pd = *pi * *dj; // D_i⁻¹ D_j
            let vpdp = vm * pd * *pi; // V U_iji
            t1 += vpdp.trace_of_product(&(*dj * *pi));
            t2 += pd.trace() * vpdp.trace();
        }
    }
    let b3 = b2 - (t1 + t2) / (n * n);

    Ok(BTerms { b1, b2, b3 })
}

fn d_require_nonempty(within: &[Sym2]) -> Result<()> {
    if within.is_empty() {
        Err(crate::error::DtaError::TooFewStudies { required: 1, actual: 0 })
    } else {
        Ok(())
    }
}

/// Threshold adjustment `h` that cancels the `O(n⁻¹)` coverage error:
///
/// `h = −(1/k)(B₁/4 − B₂/2 + 2B₃) + x/(k(k+2)) (B₁/4 + B₂/2)`.
///
/// This is the root of
/// `h x f_k(x) + (B₁/4 − B₂/2 + 2B₃) f_{k+2}(x) − (B₁/4 + B₂/2) f_{k+4}(x) = 0`
/// using `f_{k+2}/f_k = x/k` and `f_{k+4}/f_k = x²/(k(k+2))`. No clamping.
pub fn h_adjust(b: &BTerms, k: u32, x: f64) -> f64 {
    let k = k as f64;
    -b.first_order_coef() / k + x / (k * (k + 2.0)) * b.second_order_coef()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vec2;

    /// Literal triple-sum evaluation, kept independent of the collapsed sums.
    #[allow(clippy::needless_range_loop)]
    fn b_star_direct(within: &[Sym2], sigma: &Sym2) -> BTerms {
        let n = within.len();
        let nf = n as f64;
        let ds: Vec<Mat2> = within.iter().map(|s| (*sigma + *s).to_mat()).collect();
        let ps: Vec<Mat2> = within.iter().map(|s| (*sigma + *s).inverse().unwrap().to_mat()).collect();
        let v = ps.iter().map(|p| p.sym_part()).sum::<Sym2>().inverse().unwrap().to_mat();
        let u = |i: usize, j: usize, k: usize| ps[i] * ds[j] * ps[k];

        let mut b1 = 0.0;
        let mut b2b = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    b1 += (v * u(j, i, k) * v * u(k, i, j)).trace();
                    b2b += (v * u(j, i, k)).trace() * (v * u(k, i, j)).trace();
                }
            }
        }
        let mut b2a = 0.0;
        for i in 0..n {
            let m = (0..n).map(|j| u(j, i, j) * v).sum::<Mat2>();
            b2a += (m * m).trace();
        }
        let b2 = (b2a + b2b) / (nf * nf);
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                t += (v * u(i, j, i) * ds[j] * ps[i]).trace();
                t += (ps[i] * ds[j]).trace() * (v * u(i, j, i)).trace();
            }
        }
        BTerms { b1: 2.0 * b1 / (nf * nf), b2, b3: b2 - t / (nf * nf) }
    }

    fn lcg_within(n: usize, seed: u64) -> Vec<Sym2> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n).map(|_| Sym2::diag(0.01 + 0.6 * next(), 0.01 + 0.6 * next())).collect()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn collapsed_sums_match_triple_sums() {
        for (n, seed) in [(1, 1), (2, 7), (5, 3), (16, 11)] {
            let within = lcg_within(n, seed);
            let sigma = Sym2::new(0.4, 0.08, 0.3);
            let fast = b_star_from_within(&within, &sigma).unwrap();
            let slow = b_star_direct(&within, &sigma);
            assert!(close(fast.b1, slow.b1, 1e-12), "{fast:?} vs {slow:?}");
            assert!(close(fast.b2, slow.b2, 1e-12), "{fast:?} vs {slow:?}");
            assert!((fast.b3 - slow.b3).abs() < 1e-12 * slow.b2.abs(), "{fast:?} vs {slow:?}");
        }
    }

    #[test]
    fn homogeneous_closed_form() {
        for n in [2usize, 3, 8, 64] {
            let within = vec![Sym2::new(0.2, 0.05, 0.3); n];
            let b = b_star_from_within(&within, &Sym2::new(0.4, 0.1, 0.4)).unwrap();
            let h = BTerms::homogeneous(n);
            assert!(close(b.b1, h.b1, 1e-10) && close(b.b2, h.b2, 1e-10));
            assert!(b.b3.abs() < 1e-10 * h.b2);
        }
    }

    #[test]
    fn single_study_degenerate_value() {
        let b = b_star_from_within(&[Sym2::diag(0.3, 0.5)], &Sym2::new(0.2, 0.1, 0.2)).unwrap();
        assert!(close(b.b1, 4.0, 1e-12));
        assert!(close(b.b2, 6.0, 1e-12));
    }

    #[test]
    fn b_star_is_shift_free() {
        let ys: Vec<Vec2> = (0..6).map(|i| [i as f64 * 0.3, -(i as f64)]).collect();
        let within: Vec<Vec2> = (0..6).map(|i| [0.1 + 0.05 * i as f64, 0.3]).collect();
        let d = Dataset::from_pairs(&ys, &within).unwrap();
        let sigma = Sym2::new(0.3, -0.05, 0.2);
        assert_eq!(b_star(&d, &sigma).unwrap(), b_star(&d.shifted([5.0, -2.0]), &sigma).unwrap());
    }

    #[test]
    fn h_examples() {
        assert_eq!(h_adjust(&BTerms::ZERO, 2, 5.991465), 0.0);
        let x = 5.991465;
        let h = h_adjust(&BTerms::homogeneous(8), 2, x);
        assert!((h - (1.0 + x / 2.0) / 8.0).abs() < 1e-15);
        assert!((h - 0.49947).abs() < 1e-5);
        let h = h_adjust(&BTerms::new(0.04, 0.02, 0.02), 2, x);
        assert!((h - (-0.02 + x / 8.0 * 0.02)).abs() < 1e-15);
        assert!((h - -0.005021).abs() < 1e-6);
    }
}
