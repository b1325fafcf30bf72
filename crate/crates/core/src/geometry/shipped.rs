//! Desk-scale geometries with a thin plate-like shape in the x-y plane and
//! thickness along z. Every geometry clamps the bottom face `y = 0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Face, FaceRef, GeometryMap, InterfaceSpec, MultiPatchModel, Patch};
use crate::error::{Error, Result};
use crate::spline::TensorSplineSpace;

/// Reference (unscaled) plate thickness of the shipped geometries.
pub const REFERENCE_THICKNESS: f64 = 0.25;

const DEGREES: [usize; 3] = [2, 2, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestGeometry {
    /// One patch on `[0,1]^3`.
    UnitCube,
    /// Two stacked patches with a non-matching horizontal interface; the
    /// upper (slave) side is finer.
    Slab2,
    /// Three patches in an inverted L: a clamped post with an arm attached
    /// to the top patch.
    Bracket3,
}

impl TestGeometry {
    pub const ALL: [TestGeometry; 3] = [TestGeometry::UnitCube, TestGeometry::Slab2, TestGeometry::Bracket3];

    pub fn name(self) -> &'static str {
        match self {
            TestGeometry::UnitCube => "unit_cube",
            TestGeometry::Slab2 => "slab2",
            TestGeometry::Bracket3 => "bracket3",
        }
    }
}

impl fmt::Display for TestGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestGeometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestGeometry::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnknownGeometry(s.to_string()))
    }
}

fn box_patch(lo: [f64; 3], hi: [f64; 3], elements: [usize; 3]) -> Result<Patch> {
    Ok(Patch::new(GeometryMap::boxed(lo, hi), TensorSplineSpace::uniform(DEGREES, elements)?))
}

pub fn build_test_geometry(which: TestGeometry) -> Result<MultiPatchModel> {
    match which {
        TestGeometry::UnitCube => {
            let model = MultiPatchModel {
                name: which.name().into(),
                patches: vec![box_patch([0.0; 3], [1.0; 3], [2, 2, 2])?],
                interfaces: vec![],
                dirichlet: vec![FaceRef::new(0, Face::VMin)],
            };
            model.validate()?;
            Ok(model)
        }
        TestGeometry::Slab2 => build_slab2([3, 2, 1], [4, 2, 1]),
        TestGeometry::Bracket3 => {
            let t = REFERENCE_THICKNESS;
            let model = MultiPatchModel {
                name: which.name().into(),
                patches: vec![
                    box_patch([0.0, 0.0, 0.0], [1.0, 1.0, t], [4, 4, 1])?,
                    box_patch([0.0, 1.0, 0.0], [1.0, 2.0, t], [3, 4, 1])?,
                    box_patch([1.0, 1.0, 0.0], [2.0, 2.0, t], [4, 3, 1])?,
                ],
                interfaces: vec![
                    InterfaceSpec {
                        slave: FaceRef::new(0, Face::VMax),
                        master: FaceRef::new(1, Face::VMin),
                    },
                    InterfaceSpec {
                        slave: FaceRef::new(1, Face::UMax),
                        master: FaceRef::new(2, Face::UMin),
                    },
                ],
                dirichlet: vec![FaceRef::new(0, Face::VMin)],
            };
            model.validate()?;
            Ok(model)
        }
    }
}

/// Two stacked patches `[0,2] x [0,0.5]` (master, clamped at `y = 0`) and
/// `[0,2] x [0.5,1]` (slave) with the given element counts.
pub fn build_slab2(master_elements: [usize; 3], slave_elements: [usize; 3]) -> Result<MultiPatchModel> {
    let t = REFERENCE_THICKNESS;
    let model = MultiPatchModel {
        name: TestGeometry::Slab2.name().into(),
        patches: vec![
            box_patch([0.0, 0.0, 0.0], [2.0, 0.5, t], master_elements)?,
            box_patch([0.0, 0.5, 0.0], [2.0, 1.0, t], slave_elements)?,
        ],
        interfaces: vec![InterfaceSpec {
            slave: FaceRef::new(1, Face::VMin),
            master: FaceRef::new(0, Face::VMax),
        }],
        dirichlet: vec![FaceRef::new(0, Face::VMin)],
    };
    model.validate()?;
    Ok(model)
}
