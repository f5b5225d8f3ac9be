use crate::assembly::{assemble_with, build_local_operators, solve, Coefficient, SchemeParameters, Solver};
use crate::error::{Error, Result};
use crate::field::Point;
use crate::mesh::Mesh;
use crate::weakspace::WeakSpaceSignature;

use super::cases::ManufacturedCase;
use super::norms::{edge_norm_eb, energy_norm, error_function, l2_norm_e0};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFamily {
    Triangular,
    Rectangular,
}

impl MeshFamily {
    /// Builds the mesh whose nominal `1/h` is `label`. Rectangular labels
    /// count rows, so they must be `2 * 2^level`.
    pub fn build(&self, label: usize) -> Result<Mesh> {
        match self {
            MeshFamily::Triangular => Mesh::uniform_triangular(label),
            MeshFamily::Rectangular => {
                if label < 2 || !label.is_power_of_two() {
                    return Err(Error::InvalidMesh(format!("rectangular 1/h must be 2 * 2^level, got {label}")));
                }
                Mesh::uniform_rectangular(label.trailing_zeros() - 1)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Study {
    pub case: ManufacturedCase,
    pub family: MeshFamily,
    pub labels: Vec<usize>,
    pub signature: WeakSpaceSignature,
    pub params: SchemeParameters,
    pub solver: Solver,
    /// Solve with `f = 0`, `g = 0` while still measuring against `Q_h u`.
    pub homogeneous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelResult {
    pub label: usize,
    pub h_max: f64,
    pub energy: f64,
    pub l2: f64,
    pub edge: f64,
    pub dofs: usize,
}

impl LevelResult {
    pub fn errors(&self) -> [f64; 3] {
        [self.energy, self.l2, self.edge]
    }
}

/// `ln(e_c / e_f) / ln(h_c / h_f)`; `None` unless both errors are positive.
pub fn rate(err_coarse: f64, err_fine: f64, h_coarse: f64, h_fine: f64) -> Option<f64> {
    if err_coarse > 0.0 && err_fine > 0.0 && h_coarse != h_fine {
        Some((err_coarse / err_fine).ln() / (h_coarse / h_fine).ln())
    } else {
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorReport {
    pub levels: Vec<LevelResult>,
}

impl ErrorReport {
    /// Rates between level `i - 1` and `i`, for `i >= 1`.
    pub fn rates(&self, i: usize) -> [Option<f64>; 3] {
        let (c, f) = (&self.levels[i - 1], &self.levels[i]);
        let (ec, ef) = (c.errors(), f.errors());
        [0, 1, 2].map(|n| rate(ec[n], ef[n], c.h_max, f.h_max))
    }

    pub fn final_rates(&self) -> [Option<f64>; 3] {
        self.rates(self.levels.len() - 1)
    }
}

impl Study {
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() < 2 {
            return Err(Error::InvalidParameter("a study needs at least two levels".into()));
        }
        if self.labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("levels must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn run_level(&self, label: usize) -> Result<LevelResult> {
        let mesh = self.family.build(label)?;
        self.params.validate(mesh.num_elements())?;
        let sig = self.signature;
        let ops = build_local_operators(&mesh, sig, &self.params)?;
        let a = match &self.params.coefficient {
            Coefficient::Identity => crate::assembly::IDENTITY,
            Coefficient::Constant(a) => *a,
            Coefficient::PerElement(_) => return Err(Error::InvalidParameter("manufactured sources need a constant coefficient".into())),
        };
        let zero = |_: Point| 0.0;
        let system = if self.homogeneous {
            assemble_with(&mesh, sig, &ops, &zero, &zero)?
        } else {
            assemble_with(&mesh, sig, &ops, &self.case.source(a), &self.case.boundary())?
        };
        let uh = solve(&system, self.solver)?;
        let e = error_function(&self.case.u(), &uh, &mesh, sig)?;
        Ok(LevelResult {
            label,
            h_max: mesh.h_max(),
            energy: energy_norm(&e, &ops),
            l2: l2_norm_e0(&e, &mesh, sig)?,
            edge: edge_norm_eb(&e, &mesh, sig)?,
            dofs: system.num_free(),
        })
    }

    /// Runs every level in order. On failure returns the levels completed
    /// so far together with the error, tagged with the failing level.
    pub fn run_partial(&self, mut on_level: impl FnMut(&LevelResult)) -> (ErrorReport, Option<Error>) {
        let mut report = ErrorReport::default();
        if let Err(e) = self.validate() {
            return (report, Some(e));
        }
        for (i, &label) in self.labels.iter().enumerate() {
            match self.run_level(label) {
                Ok(r) => {
                    on_level(&r);
                    report.levels.push(r);
                }
                Err(e) => {
                    return (
                        report,
                        Some(Error::AtLevel {
                            level: i,
                            label,
                            source: Box::new(e),
                        }),
                    )
                }
            }
        }
        (report, None)
    }
}

pub fn run_convergence_study(study: &Study) -> Result<ErrorReport> {
    match study.run_partial(|_| {}) {
        (report, None) => Ok(report),
        (_, Some(e)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_definition() {
        assert!((rate(4.0, 1.0, 0.2, 0.1).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(rate(0.0, 1.0, 0.2, 0.1), None);
        assert_eq!(rate(1.0, 0.0, 0.2, 0.1), None);
    }

    #[test]
    fn rectangular_labels() {
        assert_eq!(MeshFamily::Rectangular.build(16).unwrap().num_elements(), 384);
        assert_eq!(MeshFamily::Rectangular.build(2).unwrap().num_elements(), 6);
        assert!(MeshFamily::Rectangular.build(12).is_err());
        assert!(MeshFamily::Rectangular.build(1).is_err());
        assert_eq!(MeshFamily::Triangular.build(5).unwrap().num_elements(), 50);
    }

    fn study(sig: WeakSpaceSignature, labels: Vec<usize>) -> Study {
        Study {
            case: ManufacturedCase::cospi_cospi(),
            family: MeshFamily::Triangular,
            labels,
            signature: sig,
            params: SchemeParameters::default(),
            solver: Solver::Direct,
            homogeneous: false,
        }
    }

    #[test]
    fn level_lists_are_checked() {
        let s = study(WeakSpaceSignature::new(1, 1, 1), vec![4]);
        assert!(run_convergence_study(&s).is_err());
        let s = study(WeakSpaceSignature::new(1, 1, 1), vec![4, 4]);
        assert!(run_convergence_study(&s).is_err());
    }

    #[test]
    fn linear_solution_is_reproduced() {
        let mut s = study(WeakSpaceSignature::new(1, 1, 0), vec![2, 4]);
        s.case = ManufacturedCase::linear([0.3, -1.2, 2.5]);
        s.params = SchemeParameters::new(1.0, 0.0);
        let r = run_convergence_study(&s).unwrap();
        for l in &r.levels {
            assert!(l.energy <= 1e-9 && l.l2 <= 1e-9 && l.edge <= 1e-9, "{l:?}");
        }
    }

    #[test]
    fn homogeneous_run_measures_the_projection() {
        let mut s = study(WeakSpaceSignature::new(1, 1, 1), vec![2, 4]);
        s.homogeneous = true;
        let r = run_convergence_study(&s).unwrap();
        for l in &r.levels {
            assert!(l.l2.is_finite() && l.l2 > 0.4, "{l:?}");
        }
    }

    #[test]
    fn singular_system_names_the_level() {
        // rho = 0 with a constant weak gradient cannot control the interior
        let mut s = study(WeakSpaceSignature::new(1, 0, 0), vec![2, 4]);
        s.params = SchemeParameters::new(0.0, 0.0);
        let (partial, err) = s.run_partial(|_| {});
        let err = err.expect("expected a singular system");
        assert!(err.is_singular(), "{err}");
        assert!(matches!(err, Error::AtLevel { level: 0, label: 2, .. }));
        assert!(partial.levels.is_empty());
    }
}
