//! Volume assembly of the affine stiffness and mass components and of the
//! monolithic operators for a given material tensor.

use crate::error::Result;
use crate::geometry::{inv3, MultiPatchModel};
use crate::material::StiffnessVoigt;
use crate::sparse::{CsrMatrix, TripletBuilder};

use super::DofMap;

/// Voigt index pairs of the independent entries of the pulled-back tensor,
/// one stiffness component each.
pub const VOIGT_PAIRS: [(usize, usize); 9] = [
    (0, 0),
    (0, 1),
    (1, 1),
    (0, 2),
    (1, 2),
    (2, 2),
    (3, 3),
    (4, 4),
    (5, 5),
];

/// Engineering strain of the vector basis function `N e_c` with physical
/// gradient `g`, ordered `(xx, yy, zz, yz, zx, xy)`.
pub fn strain(g: [f64; 3], c: usize) -> [f64; 6] {
    match c {
        0 => [g[0], 0.0, 0.0, 0.0, g[2], g[1]],
        1 => [0.0, g[1], 0.0, g[2], 0.0, g[0]],
        _ => [0.0, 0.0, g[2], g[1], g[0], 0.0],
    }
}

struct Element {
    idx: Vec<usize>,
    mats: Vec<Vec<f64>>,
}

/// Runs `kernel(strains, values, weight, element matrices)` at every
/// quadrature point and scatters the element matrices of `ncomp` operators.
fn assemble_with<F>(model: &MultiPatchModel, dofs: &DofMap, ncomp: usize, mut kernel: F) -> Result<Vec<CsrMatrix>>
where
    F: FnMut(&[[f64; 6]], &[f64], f64, &mut [Vec<f64>]),
{
    let n = dofs.len();
    let mut builders: Vec<TripletBuilder> = (0..ncomp).map(|_| TripletBuilder::new(n, n)).collect();
    let flush = |p: usize, el: &Element, builders: &mut [TripletBuilder]| {
        let nl = 3 * el.idx.len();
        let globals: Vec<usize> = (0..nl).map(|k| dofs.global(p, el.idx[k / 3], k % 3)).collect();
        for (b, m) in builders.iter_mut().zip(&el.mats) {
            for (k, gk) in globals.iter().enumerate() {
                for (l, gl) in globals.iter().enumerate() {
                    let v = m[k * nl + l];
                    if v != 0.0 {
                        b.push(*gk, *gl, v);
                    }
                }
            }
        }
    };
    for (p, patch) in model.patches.iter().enumerate() {
        let mut current: Option<Element> = None;
        let mut strains = Vec::new();
        patch.for_each_quadrature_point(p, |xi, _, jac, w| {
            let (idx, val, grad) = patch.space.eval(xi)?;
            if current.as_ref().map_or(true, |e| e.idx != idx) {
                if let Some(done) = current.take() {
                    flush(p, &done, &mut builders);
                }
                let nl = 3 * idx.len();
                current = Some(Element {
                    idx: idx.clone(),
                    mats: vec![vec![0.0; nl * nl]; ncomp],
                });
            }
            let ji = inv3(jac);
            strains.clear();
            for g in &grad {
                let gx = [
                    g[0] * ji[0][0] + g[1] * ji[1][0] + g[2] * ji[2][0],
                    g[0] * ji[0][1] + g[1] * ji[1][1] + g[2] * ji[2][1],
                    g[0] * ji[0][2] + g[1] * ji[1][2] + g[2] * ji[2][2],
                ];
                for c in 0..3 {
                    strains.push(strain(gx, c));
                }
            }
            let el = current.as_mut().expect("element initialized");
            kernel(&strains, &val, w, &mut el.mats);
            Ok(())
        })?;
        if let Some(done) = current.take() {
            flush(p, &done, &mut builders);
        }
    }
    Ok(builders.into_iter().map(TripletBuilder::build).collect())
}

fn add_mass(vals: &[f64], w: f64, comps: &[usize], m: &mut [f64]) {
    let nl = 3 * vals.len();
    for (a, na) in vals.iter().enumerate() {
        for (b, nb) in vals.iter().enumerate() {
            let v = w * na * nb;
            for &c in comps {
                m[(3 * a + c) * nl + 3 * b + c] += v;
            }
        }
    }
}

/// Parameter-independent components: nine stiffness matrices, one per entry
/// of [`VOIGT_PAIRS`], followed by the in-plane and out-of-plane mass blocks.
pub fn assemble_components(model: &MultiPatchModel, dofs: &DofMap) -> Result<(Vec<CsrMatrix>, Vec<CsrMatrix>)> {
    let mut all = assemble_with(model, dofs, VOIGT_PAIRS.len() + 2, |eps, vals, w, mats| {
        let nl = eps.len();
        for (q, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
            let m = &mut mats[q];
            for (k, ek) in eps.iter().enumerate() {
                let (ki, kj) = (ek[i], ek[j]);
                if ki == 0.0 && kj == 0.0 {
                    continue;
                }
                for (l, el) in eps.iter().enumerate() {
                    let v = if i == j { ki * el[i] } else { ki * el[j] + kj * el[i] };
                    m[k * nl + l] += w * v;
                }
            }
        }
        let q = VOIGT_PAIRS.len();
        add_mass(vals, w, &[0, 1], &mut mats[q]);
        add_mass(vals, w, &[2], &mut mats[q + 1]);
    })?;
    let mass = all.split_off(VOIGT_PAIRS.len());
    Ok((all, mass))
}

/// Stiffness `int eps(u)^T C eps(v)` and mass `int sum_c w_c u_c v_c` for a
/// fixed tensor and per-component mass weight.
pub fn assemble_direct(
    model: &MultiPatchModel,
    dofs: &DofMap,
    c: &StiffnessVoigt,
    mass_weight: [f64; 3],
) -> Result<(CsrMatrix, CsrMatrix)> {
    let cm = c.0;
    let mut out = assemble_with(model, dofs, 2, |eps, vals, w, mats| {
        let nl = eps.len();
        let ce: Vec<[f64; 6]> = eps
            .iter()
            .map(|e| {
                let mut r = [0.0; 6];
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri = (0..6).map(|j| cm[(i, j)] * e[j]).sum();
                }
                r
            })
            .collect();
        for (k, ek) in eps.iter().enumerate() {
            for (l, cl) in ce.iter().enumerate() {
                let v: f64 = (0..6).map(|i| ek[i] * cl[i]).sum();
                mats[0][k * nl + l] += w * v;
            }
        }
        for (a, na) in vals.iter().enumerate() {
            for (b, nb) in vals.iter().enumerate() {
                for (c, wc) in mass_weight.iter().enumerate() {
                    mats[1][(3 * a + c) * nl + 3 * b + c] += w * wc * na * nb;
                }
            }
        }
    })?;
    let m = out.pop().expect("mass");
    let a = out.pop().expect("stiffness");
    Ok((a, m))
}
