//! Itô-correction constants, estimated by the quadratic-variation oracle
//! and compared against the printed values they replace.

use crate::error::Result;
use crate::matcore::Matrix;
use crate::sde::{qv_oracle, MatrixEstimate, NoiseShape, NoiseSource};

/// Estimates within this many standard errors count as consistent.
pub const CONSISTENCY_SE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Printed and derived values coincide and the estimate backs both.
    Agrees,
    /// The estimate backs the derived value and rejects the printed one.
    Diverges,
    /// The estimate does not back the derived value.
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEstimate {
    pub value: f64,
    pub se: f64,
    pub samples: usize,
}

impl ScalarEstimate {
    /// `sum c_ij X_ij` over an entrywise estimate; the SE is bounded by
    /// `sum |c_ij| se_ij`, which holds whatever the correlations are.
    pub fn linear(est: &MatrixEstimate, terms: &[(usize, usize, f64)]) -> Self {
        let mut value = 0.0;
        let mut se = 0.0;
        for &(i, j, c) in terms {
            value += c * est.mean[(i, j)];
            se += c.abs() * est.se[(i, j)];
        }
        ScalarEstimate {
            value,
            se,
            samples: est.samples,
        }
    }

    pub fn consistent_with(&self, x: f64) -> bool {
        (self.value - x).abs() <= CONSISTENCY_SE * self.se
    }

    pub fn relative_se(&self, reference: f64) -> f64 {
        self.se / reference.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantCheck {
    pub context: String,
    /// Where the printed value appears, in words.
    pub location: String,
    pub quantity: String,
    pub paper_value: f64,
    pub derived_value: f64,
    pub estimate: ScalarEstimate,
    pub verdict: Verdict,
    /// Further oracle estimates behind the same adjudication.
    pub supporting: Vec<ConstantCheck>,
}

impl ConstantCheck {
    fn new(context: &str, location: &str, quantity: &str, paper_value: f64, derived_value: f64, estimate: ScalarEstimate) -> Self {
        let verdict = if !estimate.consistent_with(derived_value) {
            Verdict::Unresolved
        } else if paper_value == derived_value {
            Verdict::Agrees
        } else if estimate.consistent_with(paper_value) {
            Verdict::Unresolved
        } else {
            Verdict::Diverges
        };
        ConstantCheck {
            context: context.into(),
            location: location.into(),
            quantity: quantity.into(),
            paper_value,
            derived_value,
            estimate,
            verdict,
            supporting: Vec::new(),
        }
    }
}

fn diag_terms(n: usize, c: f64) -> Vec<(usize, usize, f64)> {
    (0..n).map(|i| (i, i, c)).collect()
}

/// Runs every adjudication with `samples` oracle draws each.
pub fn adjudicate(samples: usize, seed: u64) -> Result<Vec<ConstantCheck>> {
    let source = NoiseSource::new(seed);
    let dt = 1e-2;
    let mut out = Vec::new();

    // S = |x|^2 under dx = (I - x x^T/|x|^2) dW has drift tr E[dx dx^T]/dt.
    let n = 3;
    let x = Matrix::from_column_slice(n, 1, &[1.0, 0.0, 0.0]);
    let qv = qv_oracle(
        |x: &Matrix, dw: &Matrix| Ok(dw - x * (x.dot(dw) / x.norm_squared())),
        &x,
        NoiseShape::Gaussian { rows: n, cols: 1 },
        dt,
        samples,
        &source,
    )?;
    out.push(ConstantCheck::new(
        "circle example (vertical BM on R^3 minus 0)",
        "circle example: slope of S = R^2",
        "dS/dt = tr E[dx dx^T]/dt, n = 3",
        (n as f64 - 1.0) / 2.0,
        n as f64 - 1.0,
        ScalarEstimate::linear(&qv.outer, &diag_terms(n, 1.0)),
    ));

    // Stratonovich-to-Ito drift of dP = dB P - P dB; the state stacks dB on
    // top of dP so the outer blocks give E[dB dP] and -E[dP dB].
    let n = 3;
    let mut p = Matrix::zeros(n, n);
    p[(0, 0)] = 1.0;
    let stacked = {
        let mut s = Matrix::zeros(2 * n, n);
        s.view_mut((n, 0), (n, n)).copy_from(&p);
        s
    };
    let qv = qv_oracle(
        |s: &Matrix, db: &Matrix| {
            let p = s.view((n, 0), (n, n)).into_owned();
            let mut y = Matrix::zeros(2 * n, n);
            y.view_mut((0, 0), (n, n)).copy_from(db);
            y.view_mut((n, 0), (n, n)).copy_from(&(db * &p - &p * db));
            Ok(y)
        },
        &stacked,
        NoiseShape::Skew { n },
        dt,
        samples,
        &source,
    )?;
    // C = (E[dB dP] - E[dP dB]) / 2 = (upper-right + lower-left) / 2; report C_11 - C_nn
    let c = |i: usize, sign: f64| [(i, n + i, 0.5 * sign), (n + i, i, 0.5 * sign)];
    let mut terms = c(0, 1.0).to_vec();
    terms.extend(c(n - 1, -1.0));
    let mut grass = ConstantCheck::new(
        "Grassmann Ito correction, P = Q I_{k,n} Q^T",
        "Grassmannian BM: dP = -2nP dt + martingale, from dQ dA = Q dA dA = -2nQ dt",
        "C_11 - C_nn of the Ito drift at P = e_1 e_1^T, n = 3, k = 1",
        -2.0 * n as f64,
        -(n as f64) / 2.0,
        ScalarEstimate::linear(&qv.outer, &terms),
    );
    let qv = qv_oracle(
        |_: &Matrix, da: &Matrix| Ok(da.clone()),
        &Matrix::zeros(n, n),
        NoiseShape::Skew { n },
        dt,
        samples,
        &source,
    )?;
    let square = qv.square.expect("square state");
    grass.supporting.push(ConstantCheck::new(
        "O(n) Brownian increment",
        "dQ dA = Q dA dA = -2nQ dt",
        "diagonal of E[dA dA]/dt, n = 3",
        -2.0 * n as f64,
        -(n as f64 - 1.0) / 2.0,
        ScalarEstimate::linear(&square, &diag_terms(n, 1.0 / n as f64)),
    ));
    out.push(grass);

    // Wishart: W is n x k, so E[dW dW^T] = k I.
    let (n, k) = (3, 2);
    let qv = qv_oracle(
        |_: &Matrix, dw: &Matrix| Ok(dw.clone()),
        &Matrix::zeros(n, k),
        NoiseShape::Gaussian { rows: n, cols: k },
        dt,
        samples,
        &source,
    )?;
    out.push(ConstantCheck::new(
        "Wishart process W W^T, W an n x k Wiener matrix",
        "Bures-Wasserstein BM corollary: dW dW^T = nI dt",
        "diagonal of E[dW dW^T]/dt, n = 3, k = 2",
        n as f64,
        k as f64,
        ScalarEstimate::linear(&qv.outer, &diag_terms(n, 1.0 / n as f64)),
    ));

    // Cartan-Hadamard: dG = G dW + G dt/2 gives dP = ... + (1 + E[dW dW^T]/dt) P dt.
    let n = 2;
    let qv = qv_oracle(
        |g: &Matrix, dw: &Matrix| Ok(g * dw),
        &Matrix::identity(n, n),
        NoiseShape::Gaussian { rows: n, cols: n },
        dt,
        samples,
        &source,
    )?;
    let mut est = ScalarEstimate::linear(&qv.outer, &diag_terms(n, 1.0 / n as f64));
    est.value += 1.0;
    out.push(ConstantCheck::new(
        "Cartan-Hadamard BM, P = G G^T",
        "Cartan-Hadamard BM: dP = G(dW + dW^T)G^T + (n+1)P dt",
        "drift coefficient of P, n = 2",
        n as f64 + 1.0,
        n as f64 + 1.0,
        est,
    ));
    Ok(out)
}

pub fn divergences(checks: &[ConstantCheck]) -> Vec<&ConstantCheck> {
    checks.iter().filter(|c| c.verdict == Verdict::Diverges).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_divergences_one_agreement() {
        let checks = adjudicate(20_000, 3).unwrap();
        let div = divergences(&checks);
        assert_eq!(div.len(), 3);
        for c in &div {
            assert!(c.estimate.relative_se(c.derived_value) < 0.05, "{}: se {}", c.context, c.estimate.se);
        }
        assert!(div[0].context.starts_with("circle"));
        assert!(div[1].context.starts_with("Grassmann"));
        assert!(div[2].context.starts_with("Wishart"));
        assert_eq!(div[1].supporting[0].verdict, Verdict::Diverges);
        let agree: Vec<_> = checks.iter().filter(|c| c.verdict == Verdict::Agrees).collect();
        assert_eq!(agree.len(), 1);
        assert!(checks.iter().all(|c| c.verdict != Verdict::Unresolved));
    }

    #[test]
    fn verdict_rules() {
        let est = ScalarEstimate {
            value: 2.0,
            se: 0.01,
            samples: 100,
        };
        assert_eq!(ConstantCheck::new("", "", "", 1.0, 2.0, est).verdict, Verdict::Diverges);
        assert_eq!(ConstantCheck::new("", "", "", 2.0, 2.0, est).verdict, Verdict::Agrees);
        assert_eq!(ConstantCheck::new("", "", "", 1.0, 3.0, est).verdict, Verdict::Unresolved);
        let wide = ScalarEstimate { se: 1.0, ..est };
        assert_eq!(ConstantCheck::new("", "", "", 1.0, 2.0, wide).verdict, Verdict::Unresolved);
    }
}
