//! Orthotropic material law in Voigt notation, admissibility of engineering
//! constants, parameter boxes and the thickness pullback of the stiffness
//! tensor and mass weight.
//!
//! Voigt ordering is `(xx, yy, zz, yz, zx, xy)` with engineering shear
//! strains. Poisson ratios follow `nu_ij = -eps_j / eps_i` under uniaxial
//! stress in direction `i`, so that `nu_ij E_j = nu_ji E_i`.

use std::fmt;

use nalgebra::{Matrix3, Matrix6};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass density used throughout unless overridden [kg/m^3].
pub const DEFAULT_DENSITY: f64 = 720.0;

/// Consecutive rejected draws after which a box is declared inadmissible.
pub const MAX_REJECTED_DRAWS: usize = 100_000;

/// Material and geometry parameters of one query. Moduli in MPa, density in
/// kg/m^3, `thickness` is the dimensionless scaling of the third coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSample {
    pub e_x: f64,
    pub e_y: f64,
    pub e_z: f64,
    pub g_yz: f64,
    pub g_zx: f64,
    pub g_xy: f64,
    pub nu_yz: f64,
    pub nu_zx: f64,
    pub nu_xy: f64,
    pub thickness: f64,
    #[serde(default = "default_density")]
    pub density: f64,
}

fn default_density() -> f64 {
    DEFAULT_DENSITY
}

/// Named coordinate of a [`ParameterSample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamId {
    EX,
    EY,
    EZ,
    GYz,
    GZx,
    GXy,
    NuYz,
    NuZx,
    NuXy,
    Thickness,
    Density,
}

impl ParamId {
    pub const ALL: [ParamId; 11] = [
        ParamId::EX,
        ParamId::EY,
        ParamId::EZ,
        ParamId::GYz,
        ParamId::GZx,
        ParamId::GXy,
        ParamId::NuYz,
        ParamId::NuZx,
        ParamId::NuXy,
        ParamId::Thickness,
        ParamId::Density,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::EX => "e_x",
            ParamId::EY => "e_y",
            ParamId::EZ => "e_z",
            ParamId::GYz => "g_yz",
            ParamId::GZx => "g_zx",
            ParamId::GXy => "g_xy",
            ParamId::NuYz => "nu_yz",
            ParamId::NuZx => "nu_zx",
            ParamId::NuXy => "nu_xy",
            ParamId::Thickness => "thickness",
            ParamId::Density => "density",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl ParameterSample {
    /// Reference beech parameters with unit thickness and default density.
    pub fn reference() -> Self {
        Self {
            e_x: 14000.0,
            e_y: 2280.0,
            e_z: 1160.0,
            g_yz: 465.0,
            g_zx: 1080.0,
            g_xy: 1640.0,
            nu_yz: 0.36,
            nu_zx: 0.0429,
            nu_xy: 0.448,
            thickness: 1.0,
            density: DEFAULT_DENSITY,
        }
    }

    /// Isotropic material expressed through the orthotropic constants.
    pub fn isotropic(e: f64, nu: f64) -> Self {
        let g = e / (2.0 * (1.0 + nu));
        Self {
            e_x: e,
            e_y: e,
            e_z: e,
            g_yz: g,
            g_zx: g,
            g_xy: g,
            nu_yz: nu,
            nu_zx: nu,
            nu_xy: nu,
            thickness: 1.0,
            density: DEFAULT_DENSITY,
        }
    }

    pub fn to_array(&self) -> [f64; 11] {
        [
            self.e_x,
            self.e_y,
            self.e_z,
            self.g_yz,
            self.g_zx,
            self.g_xy,
            self.nu_yz,
            self.nu_zx,
            self.nu_xy,
            self.thickness,
            self.density,
        ]
    }

    pub fn from_array(a: [f64; 11]) -> Self {
        Self {
            e_x: a[0],
            e_y: a[1],
            e_z: a[2],
            g_yz: a[3],
            g_zx: a[4],
            g_xy: a[5],
            nu_yz: a[6],
            nu_zx: a[7],
            nu_xy: a[8],
            thickness: a[9],
            density: a[10],
        }
    }

    pub fn get(&self, id: ParamId) -> f64 {
        self.to_array()[id.index()]
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        let mut a = self.to_array();
        a[id.index()] = value;
        *self = Self::from_array(a);
    }

    pub fn with_density(mut self, density: f64) -> Self {
        self.density = density;
        self
    }

    pub fn with_thickness(mut self, thickness: f64) -> Self {
        self.thickness = thickness;
        self
    }

    fn positivity_violation(&self) -> Option<String> {
        let checks = [
            (ParamId::EX, self.e_x),
            (ParamId::EY, self.e_y),
            (ParamId::EZ, self.e_z),
            (ParamId::GYz, self.g_yz),
            (ParamId::GZx, self.g_zx),
            (ParamId::GXy, self.g_xy),
            (ParamId::Thickness, self.thickness),
            (ParamId::Density, self.density),
        ];
        checks
            .iter()
            .find(|(_, v)| !(*v > 0.0 && v.is_finite()))
            .map(|(id, v)| format!("{id} = {v} must be positive"))
            .or_else(|| {
                [self.nu_yz, self.nu_zx, self.nu_xy]
                    .iter()
                    .any(|v| !v.is_finite())
                    .then(|| "Poisson ratios must be finite".to_string())
            })
    }

    /// `1 - (nu_yz^2 E_z/E_y + nu_xy^2 E_y/E_x + 2 nu_xy nu_yz nu_zx
    /// + nu_zx^2 E_x/E_z)`, the scaled determinant of the normal compliance
    /// block.
    pub fn determinant_margin(&self) -> f64 {
        1.0 - (self.nu_yz * self.nu_yz * self.e_z / self.e_y
            + self.nu_xy * self.nu_xy * self.e_y / self.e_x
            + 2.0 * self.nu_xy * self.nu_yz * self.nu_zx
            + self.nu_zx * self.nu_zx * self.e_x / self.e_z)
    }

    /// `E_x / E_y - nu_xy^2`.
    pub fn in_plane_margin(&self) -> f64 {
        self.e_x / self.e_y - self.nu_xy * self.nu_xy
    }
}

/// Symmetric 6x6 stiffness in Voigt ordering `(xx, yy, zz, yz, zx, xy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StiffnessVoigt(pub Matrix6<f64>);

impl StiffnessVoigt {
    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Positive definiteness through a Cholesky attempt.
    pub fn is_positive_definite(&self) -> bool {
        self.0.cholesky().is_some()
    }
}

/// Normal-strain compliance block `S` with `eps = S sigma`.
pub fn compliance_block(mu: &ParameterSample) -> Matrix3<f64> {
    let s_xy = -mu.nu_xy / mu.e_x;
    let s_yz = -mu.nu_yz / mu.e_y;
    let s_zx = -mu.nu_zx / mu.e_z;
    Matrix3::new(
        1.0 / mu.e_x,
        s_xy,
        s_zx,
        s_xy,
        1.0 / mu.e_y,
        s_yz,
        s_zx,
        s_yz,
        1.0 / mu.e_z,
    )
}

/// Stiffness tensor from engineering constants: the normal block is the
/// inverse of the compliance block, shear moduli sit on the shear diagonal.
pub fn stiffness_from_engineering(mu: &ParameterSample) -> Result<StiffnessVoigt> {
    if let Some(msg) = mu.positivity_violation() {
        return Err(Error::Inadmissible(msg));
    }
    let s = compliance_block(mu);
    let det = s.determinant();
    if !(det.abs() > f64::EPSILON * s.norm().powi(3)) {
        return Err(Error::Inadmissible("singular compliance block".into()));
    }
    let a = s
        .try_inverse()
        .ok_or_else(|| Error::Inadmissible("singular compliance block".into()))?;
    let mut c = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            c[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    c[(3, 3)] = mu.g_yz;
    c[(4, 4)] = mu.g_zx;
    c[(5, 5)] = mu.g_xy;
    Ok(StiffnessVoigt(c))
}

/// Stiffness seen on the reference domain when the third coordinate is
/// scaled by `thickness`: `D C D` with `D = diag(1, 1, t^-2, t^-1, t^-1, 1)`.
pub fn transform_tensor(c: &StiffnessVoigt, thickness: f64) -> Result<StiffnessVoigt> {
    let d = voigt_scaling(thickness)?;
    let mut out = c.0;
    for i in 0..6 {
        for j in 0..6 {
            out[(i, j)] *= d[i] * d[j];
        }
    }
    Ok(StiffnessVoigt(out))
}

fn voigt_scaling(thickness: f64) -> Result<[f64; 6]> {
    if !(thickness > 0.0 && thickness.is_finite()) {
        return Err(Error::Inadmissible(format!("thickness {thickness} must be positive")));
    }
    let r = 1.0 / thickness;
    Ok([1.0, 1.0, r * r, r, r, 1.0])
}

/// Per-component mass weight on the reference domain: `(1, 1, t^-2)`.
pub fn mass_weight(thickness: f64) -> Result<[f64; 3]> {
    if !(thickness > 0.0 && thickness.is_finite()) {
        return Err(Error::Inadmissible(format!("thickness {thickness} must be positive")));
    }
    Ok([1.0, 1.0, 1.0 / (thickness * thickness)])
}

/// Box of parameters with admissibility margins `c0` (compliance
/// determinant) and `c1` (in-plane condition).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterBox {
    pub lower: ParameterSample,
    pub upper: ParameterSample,
    #[serde(default = "default_margin")]
    pub c0: f64,
    #[serde(default = "default_margin")]
    pub c1: f64,
}

fn default_margin() -> f64 {
    1e-3
}

impl ParameterBox {
    /// Natural variation around the reference beech parameters.
    pub fn p1() -> Self {
        let lower = ParameterSample {
            e_x: 13000.0,
            e_y: 1500.0,
            e_z: 750.0,
            g_yz: 100.0,
            g_zx: 500.0,
            g_xy: 1000.0,
            nu_yz: 0.3,
            nu_zx: 0.03,
            nu_xy: 0.4,
            thickness: 1.0,
            density: DEFAULT_DENSITY,
        };
        let upper = ParameterSample {
            e_x: 15000.0,
            e_y: 3000.0,
            e_z: 1500.0,
            g_yz: 1000.0,
            g_zx: 1500.0,
            g_xy: 2000.0,
            nu_yz: 0.4,
            nu_zx: 0.06,
            nu_xy: 0.5,
            thickness: 1.0,
            density: DEFAULT_DENSITY,
        };
        Self::new(lower, upper).expect("valid preset")
    }

    /// Range covering several wood types.
    pub fn p2() -> Self {
        let lower = ParameterSample {
            e_x: 1000.0,
            e_y: 100.0,
            e_z: 100.0,
            g_yz: 10.0,
            g_zx: 100.0,
            g_xy: 100.0,
            nu_yz: 0.1,
            nu_zx: 0.01,
            nu_xy: 0.3,
            thickness: 1.0,
            density: DEFAULT_DENSITY,
        };
        let upper = ParameterSample {
            e_x: 20000.0,
            e_y: 5000.0,
            e_z: 2000.0,
            g_yz: 5000.0,
            g_zx: 2500.0,
            g_xy: 5000.0,
            nu_yz: 0.5,
            nu_zx: 0.1,
            nu_xy: 0.5,
            thickness: 1.0,
            density: DEFAULT_DENSITY,
        };
        Self::new(lower, upper).expect("valid preset")
    }

    pub fn new(lower: ParameterSample, upper: ParameterSample) -> Result<Self> {
        let out = Self {
            lower,
            upper,
            c0: default_margin(),
            c1: default_margin(),
        };
        out.check()?;
        Ok(out)
    }

    pub fn check(&self) -> Result<()> {
        for id in ParamId::ALL {
            let (lo, hi) = (self.lower.get(id), self.upper.get(id));
            if !(lo <= hi) {
                return Err(Error::Config(format!("box bound for {id}: {lo} > {hi}")));
            }
        }
        if !(self.c0 >= 0.0 && self.c1 >= 0.0) {
            return Err(Error::Config("admissibility margins must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn with_margins(mut self, c0: f64, c1: f64) -> Self {
        self.c0 = c0;
        self.c1 = c1;
        self
    }

    pub fn with_range(mut self, id: ParamId, lo: f64, hi: f64) -> Self {
        self.lower.set(id, lo);
        self.upper.set(id, hi);
        self
    }

    /// Pins every coordinate outside `varied` to `reference`.
    pub fn restricted_to(mut self, varied: &[ParamId], reference: &ParameterSample) -> Self {
        for id in ParamId::ALL {
            if !varied.contains(&id) {
                let v = reference.get(id);
                self.lower.set(id, v);
                self.upper.set(id, v);
            }
        }
        self
    }

    pub fn contains(&self, mu: &ParameterSample) -> bool {
        ParamId::ALL
            .iter()
            .all(|&id| mu.get(id) >= self.lower.get(id) && mu.get(id) <= self.upper.get(id))
    }

    /// Uniform draw per coordinate, rejected until admissible.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ParameterSample> {
        for _ in 0..MAX_REJECTED_DRAWS {
            let mut a = [0.0; 11];
            for id in ParamId::ALL {
                let (lo, hi) = (self.lower.get(id), self.upper.get(id));
                a[id.index()] = if lo == hi { lo } else { rng.random_range(lo..=hi) };
            }
            let mu = ParameterSample::from_array(a);
            if check_admissibility(&mu, self) {
                return Ok(mu);
            }
        }
        Err(Error::Inadmissible(format!(
            "no admissible sample found in {MAX_REJECTED_DRAWS} draws from the parameter box"
        )))
    }

    pub fn sample_many<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<ParameterSample>> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// Admissibility with the margins of `bx`: positive moduli, both margin
/// conditions, and a positive definite assembled stiffness. Box membership
/// is not part of admissibility.
pub fn check_admissibility(mu: &ParameterSample, bx: &ParameterBox) -> bool {
    admissibility_report(mu, bx).is_ok()
}

/// Like [`check_admissibility`] but names the first violated condition.
pub fn admissibility_report(mu: &ParameterSample, bx: &ParameterBox) -> Result<()> {
    if let Some(msg) = mu.positivity_violation() {
        return Err(Error::Inadmissible(msg));
    }
    let m0 = mu.determinant_margin();
    if !(m0 >= bx.c0) {
        return Err(Error::Inadmissible(format!(
            "compliance determinant margin {m0:.6} below c0 = {}",
            bx.c0
        )));
    }
    let m1 = mu.in_plane_margin();
    if !(m1 >= bx.c1) {
        return Err(Error::Inadmissible(format!(
            "E_x/E_y - nu_xy^2 = {m1:.6} below c1 = {}",
            bx.c1
        )));
    }
    let c = stiffness_from_engineering(mu)?;
    if !c.is_positive_definite() {
        return Err(Error::Inadmissible("stiffness tensor is not positive definite".into()));
    }
    Ok(())
}
