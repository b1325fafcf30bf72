use serde::{Deserialize, Serialize};

use super::knots::{eval_basis, KnotVector};
use crate::error::Result;

/// Trivariate tensor-product spline space on the parametric unit cube.
/// Scalar basis functions are numbered with the first direction fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSplineSpace {
    pub knots: [KnotVector; 3],
}

impl TensorSplineSpace {
    pub fn new(knots: [KnotVector; 3]) -> Self {
        Self { knots }
    }

    /// Uniform space of the given degrees and element counts on `[0,1]^3`.
    pub fn uniform(degrees: [usize; 3], elements: [usize; 3]) -> Result<Self> {
        Ok(Self {
            knots: [
                KnotVector::uniform(degrees[0], elements[0])?,
                KnotVector::uniform(degrees[1], elements[1])?,
                KnotVector::uniform(degrees[2], elements[2])?,
            ],
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.knots[0].dim(), self.knots[1].dim(), self.knots[2].dim()]
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn degrees(&self) -> [usize; 3] {
        [self.knots[0].degree(), self.knots[1].degree(), self.knots[2].degree()]
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        let [n0, n1, _] = self.dims();
        ijk[0] + n0 * (ijk[1] + n1 * ijk[2])
    }

    pub fn multi_index(&self, l: usize) -> [usize; 3] {
        let [n0, n1, _] = self.dims();
        [l % n0, (l / n0) % n1, l / (n0 * n1)]
    }

    pub fn greville(&self, l: usize) -> [f64; 3] {
        let ijk = self.multi_index(l);
        [
            self.knots[0].greville(ijk[0]),
            self.knots[1].greville(ijk[1]),
            self.knots[2].greville(ijk[2]),
        ]
    }

    /// Active scalar basis functions at a parametric point with their values
    /// and parametric gradients.
    pub fn eval(&self, xi: [f64; 3]) -> Result<(Vec<usize>, Vec<f64>, Vec<[f64; 3]>)> {
        let b = [
            eval_basis(&self.knots[0], xi[0])?,
            eval_basis(&self.knots[1], xi[1])?,
            eval_basis(&self.knots[2], xi[2])?,
        ];
        let cap = b.iter().map(|x| x.values.len()).product();
        let mut idx = Vec::with_capacity(cap);
        let mut val = Vec::with_capacity(cap);
        let mut grad = Vec::with_capacity(cap);
        for (c, k) in b[2].indices().enumerate() {
            for (bj, j) in b[1].indices().enumerate() {
                for (ai, i) in b[0].indices().enumerate() {
                    idx.push(self.index([i, j, k]));
                    let (v0, v1, v2) = (b[0].values[ai], b[1].values[bj], b[2].values[c]);
                    val.push(v0 * v1 * v2);
                    grad.push([
                        b[0].derivatives[ai] * v1 * v2,
                        v0 * b[1].derivatives[bj] * v2,
                        v0 * v1 * b[2].derivatives[c],
                    ]);
                }
            }
        }
        Ok((idx, val, grad))
    }
}
