//! Single-valuedness of phase fields: loop windings, gauge transformations,
//! superposition consistency and the charge verdict.
//!
//! Multi-valued states live on the covering space: the stored field is
//! single-valued on the grid and the branch mismatch sits at the seam as a
//! per-dimension twist angle, added to the phase step when a loop crosses the
//! seam forward and subtracted when it crosses backward.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::calculus::wrap_angle;
use crate::constants::Constants;
use crate::error::{EdError, Result};
use crate::field::{ComplexField, ScalarField};
use crate::gauge::GaugeConfig;
use crate::grid::Grid;

/// Residual below which a loop phase counts as an exact multiple of 2 pi.
pub const SINGLE_VALUED_TOL: f64 = 1e-6;
/// Adjacent jumps at least this large are flagged as under-resolved.
pub const UNDER_RESOLVED_JUMP: f64 = PI - 0.1;

/// A closed path of adjacent cells. The closing step runs from the last cell
/// back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    grid: Grid,
    cells: Vec<usize>,
    /// For each step `i -> i+1`: dimension and +1/-1 if it crosses a seam, else 0.
    seams: Vec<(usize, i8)>,
}

impl Loop {
    pub fn new(grid: &Grid, cells: Vec<usize>) -> Result<Self> {
        if cells.len() < 3 {
            return Err(EdError::Invalid("a loop needs at least 3 cells".into()));
        }
        if let Some(c) = cells.iter().find(|c| **c >= grid.len()) {
            return Err(EdError::Invalid(format!("loop cell {c} outside the grid")));
        }
        let mut seams = Vec::with_capacity(cells.len());
        for i in 0..cells.len() {
            let (a, b) = (cells[i], cells[(i + 1) % cells.len()]);
            let step = (0..grid.dim()).find_map(|d| {
                if grid.neighbor(a, d, true) == Some(b) {
                    Some((d, if grid.is_seam_face(a, d) { 1 } else { 0 }))
                } else if grid.neighbor(a, d, false) == Some(b) {
                    Some((d, if grid.is_seam_face(b, d) { -1 } else { 0 }))
                } else {
                    None
                }
            });
            match step {
                Some(s) => seams.push(s),
                None => {
                    return Err(EdError::Invalid(format!(
                        "loop cells {a} and {b} are not adjacent"
                    )))
                }
            }
        }
        Ok(Self {
            grid: grid.clone(),
            cells,
            seams,
        })
    }

    /// The fundamental cycle along periodic dimension `axis` through `cell`,
    /// traversed forward starting at coordinate 0.
    pub fn axis_cycle(grid: &Grid, axis: usize, cell: usize) -> Result<Self> {
        if !grid.is_periodic() || axis >= grid.dim() {
            return Err(EdError::Invalid(
                "axis cycles need a periodic dimension".into(),
            ));
        }
        let c = grid.coords(cell);
        let start = cell - c[axis] * grid.stride(axis);
        let cells = (0..grid.points()[axis])
            .map(|i| start + i * grid.stride(axis))
            .collect();
        Self::new(grid, cells)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Total twist picked up going once around: sum of signed seam crossings.
    pub fn twist(&self, seam_twist: &[f64]) -> f64 {
        self.seams
            .iter()
            .map(|(d, s)| *s as f64 * seam_twist.get(*d).copied().unwrap_or(0.0))
            .sum()
    }

    fn step_twist(&self, i: usize, seam_twist: &[f64]) -> f64 {
        let (d, s) = self.seams[i];
        s as f64 * seam_twist.get(d).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindingResult {
    pub winding: i64,
    /// Total phase change around the loop, in radians.
    pub raw_phase_change: f64,
    /// `|raw - 2 pi nu|`.
    pub residual: f64,
    pub max_jump: f64,
    pub under_resolved: bool,
}

impl WindingResult {
    pub fn single_valued(&self) -> bool {
        self.residual < SINGLE_VALUED_TOL
    }

    fn from_raw(raw: f64, max_jump: f64) -> Self {
        let winding = (raw / (2.0 * PI)).round() as i64;
        Self {
            winding,
            raw_phase_change: raw,
            residual: (raw - 2.0 * PI * winding as f64).abs(),
            max_jump,
            under_resolved: max_jump >= UNDER_RESOLVED_JUMP,
        }
    }
}

/// Winding of `Phi / hbar` (a plain angle field) around a loop; every
/// consecutive difference is branch-corrected to `(-pi, pi]`.
pub fn winding_number(phase_over_hbar: &ScalarField, lp: &Loop) -> Result<WindingResult> {
    winding_number_covering(phase_over_hbar, lp, &vec![0.0; lp.grid.dim()])
}

/// [`winding_number`] for a covering-space field with the given seam twist.
pub fn winding_number_covering(
    phase_over_hbar: &ScalarField,
    lp: &Loop,
    seam_twist: &[f64],
) -> Result<WindingResult> {
    phase_over_hbar.grid().check_same(&lp.grid)?;
    let th = phase_over_hbar.values();
    let n = lp.cells.len();
    let mut raw = 0.0;
    let mut max_jump: f64 = 0.0;
    for i in 0..n {
        let (a, b) = (lp.cells[i], lp.cells[(i + 1) % n]);
        let jump = wrap_angle(th[b] - th[a] + lp.step_twist(i, seam_twist));
        max_jump = max_jump.max(jump.abs());
        raw += jump;
    }
    Ok(WindingResult::from_raw(raw, max_jump))
}

/// Winding of the phase of a complex field (with its seam twist).
pub fn winding_of_complex(
    psi: &ComplexField,
    lp: &Loop,
    seam_twist: &[f64],
) -> Result<WindingResult> {
    psi.grid().check_same(&lp.grid)?;
    for &c in &lp.cells {
        let m = psi.values()[c].norm_sqr();
        if m == 0.0 {
            return Err(EdError::Node { cell: c, value: m });
        }
    }
    let th = ScalarField::from_values(psi.grid(), psi.values().iter().map(|z| z.arg()).collect())?;
    winding_number_covering(&th, lp, seam_twist)
}

/// `chi -> chi + gamma (mod 2 pi)`, `A -> A + d gamma`.
pub fn gauge_transform(gauge: &GaugeConfig, gamma: &ScalarField) -> Result<GaugeConfig> {
    gauge.transformed(gamma)
}

/// Max change of the corrected derivative `d chi - A` between two gauges.
pub fn gauge_invariance_residual(before: &GaugeConfig, after: &GaugeConfig) -> Result<f64> {
    let a = before.corrected_derivative();
    let b = after.corrected_derivative();
    Ok(a.zip_map(&b, |x, y| (x - y).abs())?.max_abs())
}

/// A covering-space branch: the stored field and its seam twist.
#[derive(Debug, Clone, Copy)]
pub struct Branch<'a> {
    pub psi: &'a ComplexField,
    pub seam_twist: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionReport {
    pub delta1: f64,
    pub delta2: f64,
    pub single_valued: bool,
    /// `|Psi3'|^2 - |Psi3|^2` at the loop's first cell.
    pub closure_mismatch: f64,
    /// Largest `|Psi3'|^2 - |Psi3|^2` over loop cells.
    pub max_mismatch: f64,
}

/// Whether `|a1 Psi1 + a2 Psi2|^2` returns to itself around a loop. Carrying
/// each branch once around multiplies it by `exp(i delta_j)`, so the density
/// changes by `2 Re[a1 conj(a2) (exp(i(delta1 - delta2)) - 1) Psi1 conj(Psi2)]`.
pub fn superposition_single_valuedness(
    b1: Branch,
    b2: Branch,
    a1: Complex64,
    a2: Complex64,
    lp: &Loop,
    _k: &Constants,
) -> Result<SuperpositionReport> {
    b1.psi.grid().check_same(b2.psi.grid())?;
    let w1 = winding_of_complex(b1.psi, lp, b1.seam_twist)?;
    let w2 = winding_of_complex(b2.psi, lp, b2.seam_twist)?;
    let (d1, d2) = (w1.raw_phase_change, w2.raw_phase_change);
    let single_valued = (a1 == Complex64::new(0.0, 0.0) || w1.single_valued())
        && (a2 == Complex64::new(0.0, 0.0) || w2.single_valued());
    let factor = Complex64::from_polar(1.0, d1 - d2) - 1.0;
    let mismatch = |c: usize| {
        2.0 * (a1 * a2.conj() * factor * b1.psi.values()[c] * b2.psi.values()[c].conj()).re
    };
    let closure_mismatch = mismatch(lp.cells[0]);
    let max_mismatch = lp
        .cells
        .iter()
        .map(|c| mismatch(*c).abs())
        .fold(0.0, f64::max);
    Ok(SuperpositionReport {
        delta1: d1,
        delta2: d2,
        single_valued,
        closure_mismatch,
        max_mismatch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeVerdict {
    pub charge: f64,
    pub quantized: bool,
}

/// `q = beta hbar c`; quantized when beta is an integer.
pub fn charge_from_beta(beta: f64, k: &Constants) -> ChargeVerdict {
    ChargeVerdict {
        charge: beta * k.hbar * k.c,
        quantized: (beta - beta.round()).abs() < 1e-9,
    }
}

/// Plain-text table: loop_id, raw_phase, nu, residual, verdict.
pub fn format_winding_report(rows: &[(String, WindingResult)]) -> String {
    let mut out = format!(
        "{:<16} {:>14} {:>6} {:>12}  {}\n",
        "loop_id", "raw_phase", "nu", "residual", "verdict"
    );
    for (id, w) in rows {
        let verdict = match (w.single_valued(), w.under_resolved) {
            (true, false) => "single-valued",
            (true, true) => "single-valued (under-resolved)",
            (false, false) => "MULTI-VALUED",
            (false, true) => "MULTI-VALUED (under-resolved)",
        };
        let _ = writeln!(
            out,
            "{:<16} {:>14.8} {:>6} {:>12.3e}  {}",
            id, w.raw_phase_change, w.winding, w.residual, verdict
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Centering, VectorField};
    use crate::grid::Boundary;
    use proptest::prelude::*;

    fn ring(n: usize) -> Grid {
        Grid::line(n, 2.0 * PI, Boundary::Periodic).unwrap()
    }

    #[test]
    fn unit_and_zero_winding() {
        let g = ring(64);
        let lp = Loop::axis_cycle(&g, 0, 0).unwrap();
        let w = winding_number(&ScalarField::from_fn(&g, |x| wrap_angle(x[0])), &lp).unwrap();
        assert_eq!(w.winding, 1);
        assert!(w.residual < 1e-12 && w.single_valued() && !w.under_resolved);
        let z = winding_number(&ScalarField::constant(&g, 0.4), &lp).unwrap();
        assert_eq!((z.winding, z.raw_phase_change), (0, 0.0));
    }

    #[test]
    fn half_integer_beta_is_multivalued() {
        let g = ring(64);
        let lp = Loop::axis_cycle(&g, 0, 0).unwrap();
        let beta = 0.5;
        let w = winding_number_covering(
            &ScalarField::from_fn(&g, |x| beta * x[0]),
            &lp,
            &[2.0 * PI * beta],
        )
        .unwrap();
        assert!((w.raw_phase_change - PI).abs() < 1e-12);
        assert!((w.residual - PI).abs() < 1e-12);
        assert!(!w.single_valued());
        assert!(format_winding_report(&[("ring".into(), w)]).contains("MULTI-VALUED"));
        let one = ScalarField::from_fn(&g, |x| wrap_angle(x[0]));
        let full = winding_number_covering(&one, &lp, &[2.0 * PI]).unwrap();
        assert_eq!(full.winding, 1);
        assert!(full.residual < 1e-12);
    }

    #[test]
    fn under_resolution_flag() {
        let g = ring(8);
        let lp = Loop::axis_cycle(&g, 0, 0).unwrap();
        let mut th = ScalarField::zeros(&g);
        th.values_mut()[4] = 3.1;
        let w = winding_number(&th, &lp).unwrap();
        assert!(w.under_resolved && w.winding == 0);
        assert!(
            !winding_number(&ScalarField::from_fn(&g, |x| wrap_angle(3.0 * x[0])), &lp)
                .unwrap()
                .under_resolved
        );
    }

    #[test]
    fn loop_validation_and_backward_traversal() {
        let g = Grid::new(vec![8, 9], vec![1.0, 1.0], Boundary::Periodic).unwrap();
        assert!(Loop::new(&g, vec![0, 2, 3]).is_err());
        let fwd = Loop::axis_cycle(&g, 1, 7).unwrap();
        assert_eq!(fwd.cells().len(), 9);
        let mut rev = fwd.cells().to_vec();
        rev.reverse();
        let back = Loop::new(&g, rev).unwrap();
        let th = ScalarField::from_fn(&g, |x| wrap_angle(4.0 * PI * x[1]));
        assert_eq!(winding_number(&th, &fwd).unwrap().winding, 2);
        assert_eq!(winding_number(&th, &back).unwrap().winding, -2);
        assert!((fwd.twist(&[0.0, 0.3]) - 0.3).abs() < 1e-15);
        assert!((back.twist(&[0.0, 0.3]) + 0.3).abs() < 1e-15);
        let refl = Grid::line(8, 1.0, Boundary::Reflecting).unwrap();
        assert!(Loop::axis_cycle(&refl, 0, 0).is_err());
    }

    #[test]
    fn gauge_transform_cases() {
        let g = ring(32);
        let gauge = GaugeConfig::new(
            ScalarField::from_fn(&g, |x| x[0].sin()),
            VectorField::from_components(
                &g,
                Centering::Face,
                vec![(0..32).map(|i| (i as f64 * 0.2).cos()).collect()],
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(
            gauge_transform(&gauge, &ScalarField::zeros(&g)).unwrap(),
            gauge
        );
        let shifted = gauge_transform(&gauge, &ScalarField::constant(&g, 0.7)).unwrap();
        assert_eq!(shifted.connection, gauge.connection);
        assert!((wrap_angle(shifted.chi.values()[3] - gauge.chi.values()[3] - 0.7)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn corrected_derivative_is_gauge_invariant(c in prop::collection::vec(-1.0f64..1.0, 3)) {
            let g = ring(48);
            let gauge = GaugeConfig::winding(&g, 0, 2);
            let gamma = ScalarField::from_fn(&g, |x| c[0] * x[0].sin() + c[1] * (2.0 * x[0]).cos() + c[2]);
            let after = gauge_transform(&gauge, &gamma).unwrap();
            prop_assert!(gauge_invariance_residual(&gauge, &after).unwrap() <= 1e-10);
            let lp = Loop::axis_cycle(&g, 0, 0).unwrap();
            prop_assert_eq!(winding_number(&after.chi, &lp).unwrap().winding, 2);
        }

        #[test]
        fn product_winding_adds(n1 in -3i64..4, n2 in -3i64..4, seed in 0.0f64..1.0) {
            let g = ring(96);
            let lp = Loop::axis_cycle(&g, 0, 0).unwrap();
            let f = |nu: i64, s: f64| ComplexField::from_fn(&g, move |x| {
                Complex64::from_polar(1.0 + 0.3 * (x[0] + s).cos(), nu as f64 * x[0] + 0.4 * (x[0] * 2.0 + s).sin())
            });
            let (p1, p2) = (f(n1, seed), f(n2, 2.0 * seed));
            let prod = ComplexField::from_values(&g, p1.values().iter().zip(p2.values()).map(|(a, b)| a * b).collect()).unwrap();
            let w = |p: &ComplexField| winding_of_complex(p, &lp, &[0.0]).unwrap().winding;
            prop_assert_eq!(w(&prod), w(&p1) + w(&p2));
        }
    }

    #[test]
    fn superposition_cases() {
        let g = ring(64);
        let k = Constants::unit(1);
        let lp = Loop::axis_cycle(&g, 0, 0).unwrap();
        let p1 = ComplexField::from_fn(&g, |x| Complex64::from_polar(0.4, x[0]));
        let p2 = ComplexField::from_fn(&g, |x| Complex64::from_polar(0.3, 2.0 * x[0]));
        let s = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
        let zero = [0.0];
        let both = superposition_single_valuedness(
            Branch {
                psi: &p1,
                seam_twist: &zero,
            },
            Branch {
                psi: &p2,
                seam_twist: &zero,
            },
            s,
            s,
            &lp,
            &k,
        )
        .unwrap();
        assert!(both.single_valued && both.max_mismatch <= 1e-10);

        // Branch 2 carries beta = 1/2: delta2 = pi.
        let half = ComplexField::from_fn(&g, |x| Complex64::from_polar(0.3, 0.5 * x[0]));
        let twist = [PI];
        let flat = ComplexField::from_fn(&g, |_| Complex64::new(0.4, 0.0));
        let r = superposition_single_valuedness(
            Branch {
                psi: &flat,
                seam_twist: &zero,
            },
            Branch {
                psi: &half,
                seam_twist: &twist,
            },
            s,
            s,
            &lp,
            &k,
        )
        .unwrap();
        assert!(!r.single_valued);
        assert!((r.delta2 - PI).abs() < 1e-12);
        // Oracle at the first loop cell by direct complex arithmetic.
        let c = lp.cells()[0];
        let (z1, z2) = (flat.values()[c], half.values()[c]);
        let before = (s * z1 + s * z2).norm_sqr();
        let after = (s * z1 + s * z2 * Complex64::from_polar(1.0, PI)).norm_sqr();
        assert!((r.closure_mismatch - (after - before)).abs() < 1e-12);
        assert!(r.max_mismatch <= 4.0 * (s * s * z1 * z2).norm() + 1e-12);
        let peak = lp
            .cells()
            .iter()
            .map(|&c| {
                4.0 * (s * s * flat.values()[c] * half.values()[c].conj())
                    .re
                    .abs()
            })
            .fold(0.0, f64::max);
        assert!((r.max_mismatch - peak).abs() < 1e-12);

        let solo = superposition_single_valuedness(
            Branch {
                psi: &p1,
                seam_twist: &zero,
            },
            Branch {
                psi: &half,
                seam_twist: &twist,
            },
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            &lp,
            &k,
        )
        .unwrap();
        assert!(solo.single_valued && solo.max_mismatch == 0.0);
        assert!(
            (solo.delta1
                - winding_of_complex(&p1, &lp, &zero)
                    .unwrap()
                    .raw_phase_change)
                .abs()
                < 1e-15
        );

        let mut nodal = p1.clone();
        nodal.values_mut()[5] = Complex64::new(0.0, 0.0);
        assert!(superposition_single_valuedness(
            Branch {
                psi: &nodal,
                seam_twist: &zero
            },
            Branch {
                psi: &p2,
                seam_twist: &zero
            },
            s,
            s,
            &lp,
            &k
        )
        .is_err());
    }

    #[test]
    fn charge_examples() {
        let k = Constants::unit(1);
        assert_eq!(
            charge_from_beta(1.0, &k),
            ChargeVerdict {
                charge: 1.0,
                quantized: true
            }
        );
        assert_eq!(
            charge_from_beta(0.0, &k),
            ChargeVerdict {
                charge: 0.0,
                quantized: true
            }
        );
        assert_eq!(
            charge_from_beta(0.5, &k),
            ChargeVerdict {
                charge: 0.5,
                quantized: false
            }
        );
        let k2 = Constants {
            c: 3.0,
            ..Constants::unit(1).with_hbar(2.0)
        };
        assert_eq!(charge_from_beta(-2.0, &k2).charge, -12.0);
    }
}
