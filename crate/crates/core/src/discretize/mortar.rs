//! Mortar coupling operator with the slave trace space as multiplier space.

use std::collections::HashMap;

use crate::error::Result;
use crate::geometry::{merge_breaks, Interface, MultiPatchModel};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::spline::gauss_rule;

use super::DofMap;

/// Multiplier rows contributed by each interface: the slave face basis
/// functions, three components each.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierLayout {
    pub offsets: Vec<usize>,
    pub slave_dofs: Vec<Vec<usize>>,
}

impl MultiplierLayout {
    pub fn new(model: &MultiPatchModel, interfaces: &[Interface]) -> Self {
        let mut offsets = Vec::with_capacity(interfaces.len() + 1);
        let mut slave_dofs = Vec::with_capacity(interfaces.len());
        let mut n = 0;
        for iface in interfaces {
            offsets.push(n);
            let sd = model.patches[iface.slave.patch].face_dofs(iface.slave.face);
            n += 3 * sd.len();
            slave_dofs.push(sd);
        }
        offsets.push(n);
        Self { offsets, slave_dofs }
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `b(v, tau) = int_gamma (v_slave - v_master) . tau`, rows indexed by
/// multiplier functions, columns by all displacement degrees of freedom.
pub fn assemble_mortar(model: &MultiPatchModel, dofs: &DofMap) -> Result<CsrMatrix> {
    model.validate()?;
    let interfaces = model.interface_maps()?;
    let layout = MultiplierLayout::new(model, &interfaces);
    let mut b = TripletBuilder::new(layout.len(), dofs.len());
    for (k, iface) in interfaces.iter().enumerate() {
        couple(model, dofs, iface, layout.offsets[k], &layout.slave_dofs[k], &mut b)?;
    }
    Ok(b.build())
}

fn couple(
    model: &MultiPatchModel,
    dofs: &DofMap,
    iface: &Interface,
    row0: usize,
    slave_dofs: &[usize],
    b: &mut TripletBuilder,
) -> Result<()> {
    let (sp, mp) = (iface.slave.patch, iface.master.patch);
    let slave = &model.patches[sp];
    let master = &model.patches[mp];
    let st = iface.slave.face.tangents();
    let mt = iface.master.face.tangents();

    let mut breaks = [slave.breaks(st[0]), slave.breaks(st[1])];
    let mut order = [slave.quadrature_order(st[0]), slave.quadrature_order(st[1])];
    for (m, &md) in mt.iter().enumerate() {
        let (sa, _) = iface.map.slave_axis(m);
        let (off, lin) = (iface.map.offset[m], iface.map.linear[m][sa]);
        let mapped: Vec<f64> = master
            .breaks(md)
            .iter()
            .map(|x| ((x - off) / lin).clamp(0.0, 1.0))
            .collect();
        breaks[sa] = merge_breaks(&breaks[sa], &mapped);
        order[sa] = order[sa].max(master.quadrature_order(md));
    }
    let rules = [gauss_rule(order[0])?, gauss_rule(order[1])?];

    let slave_pos: HashMap<usize, usize> = slave_dofs.iter().enumerate().map(|(j, &l)| (l, j)).collect();
    let master_face: std::collections::HashSet<usize> =
        master.face_dofs(iface.master.face).into_iter().collect();

    for e1 in breaks[1].windows(2) {
        for e0 in breaks[0].windows(2) {
            for (t, wt) in rules[1].mapped(e1[0], e1[1]) {
                for (s, ws) in rules[0].mapped(e0[0], e0[1]) {
                    let xs = iface.slave.face.volume_point([s, t]);
                    let (_, jac) = slave.geometry.eval(xs)?;
                    let da = [jac[0][st[0]], jac[1][st[0]], jac[2][st[0]]];
                    let db = [jac[0][st[1]], jac[1][st[1]], jac[2][st[1]]];
                    let n = [
                        da[1] * db[2] - da[2] * db[1],
                        da[2] * db[0] - da[0] * db[2],
                        da[0] * db[1] - da[1] * db[0],
                    ];
                    let w = ws * wt * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();

                    let xm = iface.master.face.volume_point(iface.map.apply([s, t]));
                    let (si, sv, _) = slave.space.eval(xs)?;
                    let (mi, mv, _) = master.space.eval(xm)?;
                    let on_slave: Vec<(usize, usize, f64)> = si
                        .iter()
                        .zip(&sv)
                        .filter_map(|(l, v)| slave_pos.get(l).map(|&j| (j, *l, *v)))
                        .collect();
                    for &(j, _, tau) in &on_slave {
                        for &(_, l, v) in &on_slave {
                            for c in 0..3 {
                                b.push(row0 + 3 * j + c, dofs.global(sp, l, c), w * tau * v);
                            }
                        }
                        for (l, v) in mi.iter().zip(&mv) {
                            if master_face.contains(l) {
                                for c in 0..3 {
                                    b.push(row0 + 3 * j + c, dofs.global(mp, *l, c), -w * tau * v);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
