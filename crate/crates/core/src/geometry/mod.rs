//! Multi-patch volume geometry: B-spline volume maps, interfaces between
//! patch faces with slave/master roles, clamped faces and the thickness map.

mod shipped;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::{gauss_rule, TensorSplineSpace};

pub use shipped::{build_slab2, build_test_geometry, TestGeometry, REFERENCE_THICKNESS};

/// Tolerance on the physical mismatch of coupled faces.
pub const COINCIDENCE_TOL: f64 = 1e-10;

pub type Mat3 = [[f64; 3]; 3];

/// Boundary face of the parametric unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    UMin,
    UMax,
    VMin,
    VMax,
    WMin,
    WMax,
}

impl Face {
    pub const ALL: [Face; 6] = [Face::UMin, Face::UMax, Face::VMin, Face::VMax, Face::WMin, Face::WMax];

    /// Parametric direction normal to the face.
    pub fn direction(self) -> usize {
        match self {
            Face::UMin | Face::UMax => 0,
            Face::VMin | Face::VMax => 1,
            Face::WMin | Face::WMax => 2,
        }
    }

    pub fn is_max(self) -> bool {
        matches!(self, Face::UMax | Face::VMax | Face::WMax)
    }

    /// The two tangential parametric directions, in increasing order.
    pub fn tangents(self) -> [usize; 2] {
        match self.direction() {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }

    /// Volume parameter of the face point with face parameters `(s, t)`.
    pub fn volume_point(self, st: [f64; 2]) -> [f64; 3] {
        let mut xi = [0.0; 3];
        xi[self.direction()] = if self.is_max() { 1.0 } else { 0.0 };
        let [a, b] = self.tangents();
        xi[a] = st[0];
        xi[b] = st[1];
        xi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceRef {
    pub patch: usize,
    pub face: Face,
}

impl FaceRef {
    pub fn new(patch: usize, face: Face) -> Self {
        Self { patch, face }
    }
}

/// B-spline volume map from the parametric unit cube to physical space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryMap {
    pub space: TensorSplineSpace,
    pub control_points: Vec<[f64; 3]>,
}

impl GeometryMap {
    /// Trilinear map onto the axis-aligned box `[lo, hi]`.
    pub fn boxed(lo: [f64; 3], hi: [f64; 3]) -> Self {
        let space = TensorSplineSpace::uniform([1, 1, 1], [1, 1, 1]).expect("valid trilinear space");
        let mut control_points = Vec::with_capacity(8);
        for k in 0..2 {
            for j in 0..2 {
                for i in 0..2 {
                    let pick = |d: usize, b: usize| if b == 0 { lo[d] } else { hi[d] };
                    control_points.push([pick(0, i), pick(1, j), pick(2, k)]);
                }
            }
        }
        Self { space, control_points }
    }

    /// Physical point and Jacobian `J[i][j] = dx_i / dxi_j`.
    pub fn eval(&self, xi: [f64; 3]) -> Result<([f64; 3], Mat3)> {
        let (idx, val, grad) = self.space.eval(xi)?;
        let mut x = [0.0; 3];
        let mut jac = [[0.0; 3]; 3];
        for ((&l, &v), g) in idx.iter().zip(&val).zip(&grad) {
            let cp = self.control_points[l];
            for i in 0..3 {
                x[i] += v * cp[i];
                for j in 0..3 {
                    jac[i][j] += cp[i] * g[j];
                }
            }
        }
        Ok((x, jac))
    }
}

/// A single patch: its geometry and the (scalar) displacement spline space.
/// Each of the three displacement components uses `space`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub geometry: GeometryMap,
    pub space: TensorSplineSpace,
}

impl Patch {
    pub fn new(geometry: GeometryMap, space: TensorSplineSpace) -> Self {
        Self { geometry, space }
    }

    /// Element breakpoints in direction `d`: union of displacement and
    /// geometry knots.
    pub fn breaks(&self, d: usize) -> Vec<f64> {
        merge_breaks(&self.space.knots[d].breakpoints(), &self.geometry.space.knots[d].breakpoints())
    }

    /// Gauss points per element in direction `d`.
    pub fn quadrature_order(&self, d: usize) -> usize {
        self.space.knots[d].degree().max(self.geometry.space.knots[d].degree()) + 1
    }

    /// Scalar displacement basis functions with nonzero trace on `face`,
    /// ordered with the first tangential direction fastest.
    pub fn face_dofs(&self, face: Face) -> Vec<usize> {
        let dims = self.space.dims();
        let d = face.direction();
        let fixed = if face.is_max() { dims[d] - 1 } else { 0 };
        let [a, b] = face.tangents();
        let mut out = Vec::with_capacity(dims[a] * dims[b]);
        for jb in 0..dims[b] {
            for ja in 0..dims[a] {
                let mut ijk = [0; 3];
                ijk[d] = fixed;
                ijk[a] = ja;
                ijk[b] = jb;
                out.push(self.space.index(ijk));
            }
        }
        out
    }

    /// Visits every volume quadrature point: parametric point, physical
    /// point, Jacobian and the quadrature weight including `det J`.
    pub fn for_each_quadrature_point(
        &self,
        patch_id: usize,
        mut f: impl FnMut([f64; 3], [f64; 3], &Mat3, f64) -> Result<()>,
    ) -> Result<()> {
        let rules = [
            gauss_rule(self.quadrature_order(0))?,
            gauss_rule(self.quadrature_order(1))?,
            gauss_rule(self.quadrature_order(2))?,
        ];
        let breaks = [self.breaks(0), self.breaks(1), self.breaks(2)];
        for ez in breaks[2].windows(2) {
            for ey in breaks[1].windows(2) {
                for ex in breaks[0].windows(2) {
                    for (z, wz) in rules[2].mapped(ez[0], ez[1]) {
                        for (y, wy) in rules[1].mapped(ey[0], ey[1]) {
                            for (x, wx) in rules[0].mapped(ex[0], ex[1]) {
                                let xi = [x, y, z];
                                let (phys, jac) = self.geometry.eval(xi)?;
                                let det = det3(&jac);
                                if !(det > 0.0) {
                                    return Err(Error::NonPositiveJacobian { patch: patch_id, det });
                                }
                                f(xi, phys, &jac, wx * wy * wz * det)?;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Pairing of a slave face with a master face as declared in a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceSpec {
    pub slave: FaceRef,
    pub master: FaceRef,
}

/// Affine identification of slave face parameters with master face
/// parameters: `master = offset + linear * slave`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceMap {
    pub offset: [f64; 2],
    pub linear: [[f64; 2]; 2],
}

impl FaceMap {
    pub fn apply(&self, st: [f64; 2]) -> [f64; 2] {
        [
            self.offset[0] + self.linear[0][0] * st[0] + self.linear[0][1] * st[1],
            self.offset[1] + self.linear[1][0] * st[0] + self.linear[1][1] * st[1],
        ]
    }

    /// For master tangential direction `m` (0 or 1), the slave direction it
    /// follows and whether it is reversed.
    pub fn slave_axis(&self, m: usize) -> (usize, bool) {
        if self.linear[m][0] != 0.0 {
            (0, self.linear[m][0] < 0.0)
        } else {
            (1, self.linear[m][1] < 0.0)
        }
    }
}

/// An interface with its derived face correspondence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interface {
    pub slave: FaceRef,
    pub master: FaceRef,
    pub map: FaceMap,
}

/// Unidirectional scaling of the third coordinate by a positive factor.
/// Its Jacobian `diag(1, 1, factor)` has constant determinant `factor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThicknessMap {
    factor: f64,
}

impl ThicknessMap {
    pub fn new(factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Inadmissible(format!("thickness factor {factor} must be positive")));
        }
        Ok(Self { factor })
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn jacobian_det(&self) -> f64 {
        self.factor
    }

    pub fn apply(&self, x: [f64; 3]) -> [f64; 3] {
        [x[0], x[1], self.factor * x[2]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPatchModel {
    #[serde(default)]
    pub name: String,
    pub patches: Vec<Patch>,
    #[serde(default)]
    pub interfaces: Vec<InterfaceSpec>,
    #[serde(default)]
    pub dirichlet: Vec<FaceRef>,
}

impl MultiPatchModel {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s).map_err(|e| match e {
            Error::Json(j) => Error::Parse {
                path: path.into(),
                msg: j.to_string(),
            },
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?).map_err(|e| Error::io(path, e))
    }

    /// Structural and geometric checks: knot domains, Jacobian positivity,
    /// face coincidence, crosspoints and Dirichlet/interface overlap.
    pub fn validate(&self) -> Result<()> {
        if self.patches.is_empty() {
            return Err(Error::InvalidModel("model has no patches".into()));
        }
        for (p, patch) in self.patches.iter().enumerate() {
            for kv in patch.space.knots.iter().chain(patch.geometry.space.knots.iter()) {
                if kv.first() != 0.0 || kv.last() != 1.0 {
                    return Err(Error::InvalidModel(format!(
                        "patch {p}: knot vectors must span [0, 1]"
                    )));
                }
            }
            if patch.geometry.control_points.len() != patch.geometry.space.dim() {
                return Err(Error::InvalidModel(format!(
                    "patch {p}: {} control points for a geometry space of dimension {}",
                    patch.geometry.control_points.len(),
                    patch.geometry.space.dim()
                )));
            }
            patch.for_each_quadrature_point(p, |_, _, _, _| Ok(()))?;
        }
        let check_ref = |r: &FaceRef| {
            if r.patch >= self.patches.len() {
                Err(Error::InvalidModel(format!("face reference to missing patch {}", r.patch)))
            } else {
                Ok(())
            }
        };
        let mut used_faces = HashSet::new();
        for iface in &self.interfaces {
            check_ref(&iface.slave)?;
            check_ref(&iface.master)?;
            if iface.slave.patch == iface.master.patch {
                return Err(Error::InvalidModel(format!(
                    "interface couples patch {} with itself",
                    iface.slave.patch
                )));
            }
            for r in [iface.slave, iface.master] {
                if !used_faces.insert(r) {
                    return Err(Error::InvalidModel(format!(
                        "face {:?} of patch {} is used by two interfaces",
                        r.face, r.patch
                    )));
                }
            }
        }
        for d in &self.dirichlet {
            check_ref(d)?;
            if used_faces.contains(d) {
                return Err(Error::InvalidModel(format!(
                    "face {:?} of patch {} is both clamped and coupled",
                    d.face, d.patch
                )));
            }
        }
        self.interface_maps()?;
        self.check_crosspoints()?;
        Ok(())
    }

    /// Slave degrees of freedom of distinct interfaces must not overlap;
    /// otherwise a crosspoint modification of the multiplier space would be
    /// required.
    fn check_crosspoints(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (k, iface) in self.interfaces.iter().enumerate() {
            let patch = &self.patches[iface.slave.patch];
            for l in patch.face_dofs(iface.slave.face) {
                if !seen.insert((iface.slave.patch, l)) {
                    return Err(Error::CrossPoint(format!(
                        "interface {k}: slave function {l} of patch {} is shared with another interface (crosspoint)",
                        iface.slave.patch
                    )));
                }
            }
        }
        Ok(())
    }

    fn face_point(&self, r: FaceRef, st: [f64; 2]) -> Result<[f64; 3]> {
        Ok(self.patches[r.patch].geometry.eval(r.face.volume_point(st))?.0)
    }

    fn length_scale(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.patches {
            for cp in &p.geometry.control_points {
                for d in 0..3 {
                    lo[d] = lo[d].min(cp[d]);
                    hi[d] = hi[d].max(cp[d]);
                }
            }
        }
        (0..3).map(|d| hi[d] - lo[d]).fold(0.0, f64::max).max(1.0)
    }

    /// Derives the face correspondence of every interface from its corner
    /// points and verifies coincidence on a sample grid.
    pub fn interface_maps(&self) -> Result<Vec<Interface>> {
        let tol = COINCIDENCE_TOL * self.length_scale();
        let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        self.interfaces
            .iter()
            .enumerate()
            .map(|(k, spec)| {
                let mut matched = [[0.0; 2]; 4];
                for (c, st) in corners.iter().enumerate() {
                    let x = self.face_point(spec.slave, *st)?;
                    let mut found = None;
                    for mst in &corners {
                        let y = self.face_point(spec.master, *mst)?;
                        if dist(&x, &y) <= tol {
                            found = Some(*mst);
                            break;
                        }
                    }
                    matched[c] = found.ok_or_else(|| {
                        Error::InvalidModel(format!(
                            "interface {k}: slave corner {st:?} has no coincident master corner"
                        ))
                    })?;
                }
                let map = FaceMap {
                    offset: matched[0],
                    linear: [
                        [matched[1][0] - matched[0][0], matched[2][0] - matched[0][0]],
                        [matched[1][1] - matched[0][1], matched[2][1] - matched[0][1]],
                    ],
                };
                let axis_aligned = map
                    .linear
                    .iter()
                    .all(|row| (row[0] != 0.0) != (row[1] != 0.0));
                if !axis_aligned {
                    return Err(Error::InvalidModel(format!(
                        "interface {k}: faces are not identified along parameter axes"
                    )));
                }
                let iface = Interface {
                    slave: spec.slave,
                    master: spec.master,
                    map,
                };
                let err = self.interface_mismatch(&iface, 7)?;
                if err > tol {
                    return Err(Error::InvalidModel(format!(
                        "interface {k}: faces do not coincide (mismatch {err:e})"
                    )));
                }
                Ok(iface)
            })
            .collect()
    }

    /// Largest physical distance between corresponding slave/master points on
    /// an `n x n` sample grid.
    pub fn interface_mismatch(&self, iface: &Interface, n: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let st = [a as f64 / (n - 1) as f64, b as f64 / (n - 1) as f64];
                let x = self.face_point(iface.slave, st)?;
                let y = self.face_point(iface.master, iface.map.apply(st))?;
                worst = worst.max(dist(&x, &y));
            }
        }
        Ok(worst)
    }

    /// Faces that are neither coupled nor clamped.
    pub fn free_faces(&self) -> Vec<FaceRef> {
        let coupled: HashSet<FaceRef> = self
            .interfaces
            .iter()
            .flat_map(|i| [i.slave, i.master])
            .collect();
        (0..self.patches.len())
            .flat_map(|p| Face::ALL.into_iter().map(move |f| FaceRef::new(p, f)))
            .filter(|r| !coupled.contains(r) && !self.dirichlet.contains(r))
            .collect()
    }

    /// Physically scaled copy: the third coordinate of every control point is
    /// multiplied by `factor`.
    pub fn apply_thickness(&self, factor: f64) -> Result<Self> {
        let map = ThicknessMap::new(factor)?;
        let mut out = self.clone();
        for p in &mut out.patches {
            for cp in &mut p.geometry.control_points {
                *cp = map.apply(*cp);
            }
        }
        Ok(out)
    }

    pub fn volume(&self) -> Result<f64> {
        let mut v = 0.0;
        for (p, patch) in self.patches.iter().enumerate() {
            patch.for_each_quadrature_point(p, |_, _, _, w| {
                v += w;
                Ok(())
            })?;
        }
        Ok(v)
    }
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse of a 3x3 matrix via cofactors.
pub fn inv3(m: &Mat3) -> Mat3 {
    let d = det3(m);
    let c = |i0: usize, i1: usize, j0: usize, j1: usize| m[i0][j0] * m[i1][j1] - m[i0][j1] * m[i1][j0];
    [
        [c(1, 2, 1, 2) / d, -c(0, 2, 1, 2) / d, c(0, 1, 1, 2) / d],
        [-c(1, 2, 0, 2) / d, c(0, 2, 0, 2) / d, -c(0, 1, 0, 2) / d],
        [c(1, 2, 0, 1) / d, -c(0, 2, 0, 1) / d, c(0, 1, 0, 1) / d],
    ]
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Sorted union of two breakpoint lists, merging values closer than 1e-14.
pub(crate) fn merge_breaks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for v in all {
        match out.last() {
            Some(&l) if (v - l).abs() <= 1e-14 => {}
            _ => out.push(v),
        }
    }
    out
}
