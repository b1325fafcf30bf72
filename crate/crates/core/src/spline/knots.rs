use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Open (clamped) knot vector of a univariate B-spline basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKnotVector", into = "RawKnotVector")]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawKnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl TryFrom<RawKnotVector> for KnotVector {
    type Error = Error;

    fn try_from(raw: RawKnotVector) -> Result<Self> {
        KnotVector::new(raw.degree, raw.knots)
    }
}

impl From<KnotVector> for RawKnotVector {
    fn from(kv: KnotVector) -> Self {
        RawKnotVector {
            degree: kv.degree,
            knots: kv.knots,
        }
    }
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidKnots("degree must be at least 1".into()));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::InvalidKnots(format!(
                "{} knots is too few for degree {degree}",
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidKnots("knots must be nondecreasing".into()));
        }
        let first = knots[0];
        let last = knots[knots.len() - 1];
        if !(last > first) {
            return Err(Error::InvalidKnots("no nonempty element".into()));
        }
        let p1 = degree + 1;
        if knots[..p1].iter().any(|&k| k != first) || knots[knots.len() - p1..].iter().any(|&k| k != last) {
            return Err(Error::InvalidKnots(format!(
                "end knots must be repeated {p1} times"
            )));
        }
        // interior multiplicities
        let interior = &knots[p1..knots.len() - p1];
        let mut i = 0;
        while i < interior.len() {
            let v = interior[i];
            let mult = interior[i..].iter().take_while(|&&k| k == v).count();
            if v == first || v == last || mult > degree {
                return Err(Error::InvalidKnots(format!(
                    "interior knot {v} has multiplicity above {degree}"
                )));
            }
            i += mult;
        }
        Ok(Self { degree, knots })
    }

    /// Open knot vector on `[0, 1]` with `elements` equal elements.
    pub fn uniform(degree: usize, elements: usize) -> Result<Self> {
        if elements == 0 {
            return Err(Error::InvalidKnots("need at least one element".into()));
        }
        let breaks: Vec<f64> = (0..=elements).map(|e| e as f64 / elements as f64).collect();
        Self::from_breaks(degree, &breaks)
    }

    /// Open knot vector with simple interior knots at the given breakpoints.
    pub fn from_breaks(degree: usize, breaks: &[f64]) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::InvalidKnots("need at least two breakpoints".into()));
        }
        let mut knots = Vec::with_capacity(breaks.len() + 2 * degree);
        knots.extend(std::iter::repeat(breaks[0]).take(degree));
        knots.extend_from_slice(breaks);
        knots.extend(std::iter::repeat(breaks[breaks.len() - 1]).take(degree));
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions.
    pub fn dim(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn first(&self) -> f64 {
        self.knots[0]
    }

    pub fn last(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Distinct knot values in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &k in &self.knots {
            if out.last() != Some(&k) {
                out.push(k);
            }
        }
        out
    }

    /// Greville abscissa of basis function `i`.
    pub fn greville(&self, i: usize) -> f64 {
        let p = self.degree;
        self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64
    }

    /// Index of the knot span containing `x`; the last nonempty span is
    /// used at the right end.
    pub fn find_span(&self, x: f64) -> usize {
        let n = self.dim() - 1;
        if x >= self.knots[n + 1] {
            return n;
        }
        let (mut lo, mut hi) = (self.degree, n + 1);
        let mut mid = (lo + hi) / 2;
        while x < self.knots[mid] || x >= self.knots[mid + 1] {
            if x < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
            mid = (lo + hi) / 2;
        }
        mid
    }

    /// Nonzero basis functions of degree `degree` (≤ own degree) at `x` in
    /// span `span`.
    fn basis_funs(&self, span: usize, x: f64, degree: usize) -> Vec<f64> {
        let u = &self.knots;
        let mut n = vec![0.0; degree + 1];
        let mut left = vec![0.0; degree + 1];
        let mut right = vec![0.0; degree + 1];
        n[0] = 1.0;
        for j in 1..=degree {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        n
    }
}

/// Active basis functions at a point: indices `first..=first + p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    pub first: usize,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

impl BasisValues {
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.values.len()
    }
}

/// Values and first derivatives of the `p + 1` basis functions active at `x`.
pub fn eval_basis(kv: &KnotVector, x: f64) -> Result<BasisValues> {
    if !(x >= kv.first() && x <= kv.last()) {
        return Err(Error::OutsideKnotRange {
            x,
            lo: kv.first(),
            hi: kv.last(),
        });
    }
    let p = kv.degree;
    let span = kv.find_span(x);
    let values = kv.basis_funs(span, x, p);
    let lower = kv.basis_funs(span, x, p - 1);
    let u = &kv.knots;
    let first = span - p;
    let derivatives = (0..=p)
        .map(|r| {
            let i = first + r;
            let mut d = 0.0;
            if r >= 1 {
                let den = u[i + p] - u[i];
                if den > 0.0 {
                    d += lower[r - 1] / den;
                }
            }
            if r < p {
                let den = u[i + p + 1] - u[i + 1];
                if den > 0.0 {
                    d -= lower[r] / den;
                }
            }
            p as f64 * d
        })
        .collect();
    Ok(BasisValues {
        first,
        values,
        derivatives,
    })
}
