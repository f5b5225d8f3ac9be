//! Exact solutions with their derived data.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::Tensor;
use crate::error::{Error, Result};
use crate::field::{Point, ScalarField, Singularity, VectorField};

type Scalar = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type Vector = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
type Matrix = Arc<dyn Fn(Point) -> Tensor + Send + Sync>;

/// A scalar field that may carry a point singularity.
#[derive(Clone)]
pub struct CaseField {
    f: Scalar,
    singularity: Option<Singularity>,
}

impl CaseField {
    pub fn new(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        CaseField {
            f: Arc::new(f),
            singularity: None,
        }
    }
}

impl ScalarField for CaseField {
    fn value(&self, p: Point) -> f64 {
        (self.f)(p)
    }

    fn singularity(&self) -> Option<Singularity> {
        self.singularity
    }
}

#[derive(Clone)]
pub struct CaseGradient {
    f: Vector,
    singularity: Option<Singularity>,
}

impl VectorField for CaseGradient {
    fn value(&self, p: Point) -> [f64; 2] {
        (self.f)(p)
    }

    fn singularity(&self) -> Option<Singularity> {
        self.singularity
    }
}

/// `u`, its gradient and Hessian; the source is `-tr(a H(u))` for a
/// constant tensor `a`, and the boundary data is `u` itself.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub regularity: String,
    u: Scalar,
    grad: Vector,
    hessian: Matrix,
    singularity: Option<Singularity>,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase").field("name", &self.name).finish_non_exhaustive()
    }
}

pub const CATALOG: [&str; 4] = ["cospi_cospi", "cospi_sinpi", "x2_cospi", "lowreg"];

impl ManufacturedCase {
    /// Looks up a catalog entry; `lowreg` needs `alpha` in `(0, 1]`.
    pub fn by_name(name: &str, alpha: Option<f64>) -> Result<ManufacturedCase> {
        match name {
            "cospi_cospi" => Ok(Self::cospi_cospi()),
            "cospi_sinpi" => Ok(Self::cospi_sinpi()),
            "x2_cospi" => Ok(Self::x2_cospi()),
            "lowreg" => {
                let a = alpha.ok_or_else(|| Error::InvalidParameter("case lowreg requires alpha".into()))?;
                Self::lowreg(a)
            }
            _ => Err(Error::InvalidParameter(format!(
                "unknown case '{name}' (expected one of {})",
                CATALOG.join(", ")
            ))),
        }
    }

    pub fn cospi_cospi() -> ManufacturedCase {
        ManufacturedCase {
            name: "cospi_cospi".into(),
            regularity: "smooth".into(),
            u: Arc::new(|p| (PI * p[0]).cos() * (PI * p[1]).cos()),
            grad: Arc::new(|p| {
                let (sx, cx, sy, cy) = ((PI * p[0]).sin(), (PI * p[0]).cos(), (PI * p[1]).sin(), (PI * p[1]).cos());
                [-PI * sx * cy, -PI * cx * sy]
            }),
            hessian: Arc::new(|p| {
                let (sx, cx, sy, cy) = ((PI * p[0]).sin(), (PI * p[0]).cos(), (PI * p[1]).sin(), (PI * p[1]).cos());
                let pp = PI * PI;
                [[-pp * cx * cy, pp * sx * sy], [pp * sx * sy, -pp * cx * cy]]
            }),
            singularity: None,
        }
    }

    pub fn cospi_sinpi() -> ManufacturedCase {
        ManufacturedCase {
            name: "cospi_sinpi".into(),
            regularity: "smooth".into(),
            u: Arc::new(|p| (PI * p[0]).cos() * (PI * p[1]).sin()),
            grad: Arc::new(|p| {
                let (sx, cx, sy, cy) = ((PI * p[0]).sin(), (PI * p[0]).cos(), (PI * p[1]).sin(), (PI * p[1]).cos());
                [-PI * sx * sy, PI * cx * cy]
            }),
            hessian: Arc::new(|p| {
                let (sx, cx, sy, cy) = ((PI * p[0]).sin(), (PI * p[0]).cos(), (PI * p[1]).sin(), (PI * p[1]).cos());
                let pp = PI * PI;
                [[-pp * cx * sy, -pp * sx * cy], [-pp * sx * cy, -pp * cx * sy]]
            }),
            singularity: None,
        }
    }

    pub fn x2_cospi() -> ManufacturedCase {
        ManufacturedCase {
            name: "x2_cospi".into(),
            regularity: "smooth".into(),
            u: Arc::new(|p| p[0] * p[0] * (PI * p[1]).cos()),
            grad: Arc::new(|p| [2.0 * p[0] * (PI * p[1]).cos(), -PI * p[0] * p[0] * (PI * p[1]).sin()]),
            hessian: Arc::new(|p| {
                let (sy, cy) = ((PI * p[1]).sin(), (PI * p[1]).cos());
                [
                    [2.0 * cy, -2.0 * PI * p[0] * sy],
                    [-2.0 * PI * p[0] * sy, -PI * PI * p[0] * p[0] * cy],
                ]
            }),
            singularity: None,
        }
    }

    /// `u = x(x-1)y(y-1) r^(alpha-2)`, in `H^(1+alpha)` near the origin.
    pub fn lowreg(alpha: f64) -> Result<ManufacturedCase> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("lowreg requires 0 < alpha <= 1, got {alpha}")));
        }
        let p = (alpha - 2.0) / 2.0;
        // u = q w, q = x(x-1)y(y-1), w = (x^2 + y^2)^p
        let q = |x: f64, y: f64| x * (x - 1.0) * y * (y - 1.0);
        let qx = |x: f64, y: f64| (2.0 * x - 1.0) * y * (y - 1.0);
        let qy = |x: f64, y: f64| x * (x - 1.0) * (2.0 * y - 1.0);
        let u = move |pt: Point| {
            let (x, y) = (pt[0], pt[1]);
            q(x, y) * (x * x + y * y).powf(p)
        };
        let grad = move |pt: Point| {
            let (x, y) = (pt[0], pt[1]);
            let r2 = x * x + y * y;
            let w = r2.powf(p);
            let dw = 2.0 * p * r2.powf(p - 1.0);
            [qx(x, y) * w + q(x, y) * dw * x, qy(x, y) * w + q(x, y) * dw * y]
        };
        let hessian = move |pt: Point| {
            let (x, y) = (pt[0], pt[1]);
            let r2 = x * x + y * y;
            let w = r2.powf(p);
            let c1 = 2.0 * p * r2.powf(p - 1.0);
            let c2 = 4.0 * p * (p - 1.0) * r2.powf(p - 2.0);
            let gw = [c1 * x, c1 * y];
            let hw = [[c1 + c2 * x * x, c2 * x * y], [c2 * x * y, c1 + c2 * y * y]];
            let gq = [qx(x, y), qy(x, y)];
            let hq = [
                [2.0 * y * (y - 1.0), (2.0 * x - 1.0) * (2.0 * y - 1.0)],
                [(2.0 * x - 1.0) * (2.0 * y - 1.0), 2.0 * x * (x - 1.0)],
            ];
            let qv = q(x, y);
            let mut h = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    h[i][j] = w * hq[i][j] + gq[i] * gw[j] + gw[i] * gq[j] + qv * hw[i][j];
                }
            }
            h
        };
        Ok(ManufacturedCase {
            name: "lowreg".into(),
            regularity: format!("H^(1+{alpha}) at the origin"),
            u: Arc::new(u),
            grad: Arc::new(grad),
            hessian: Arc::new(hessian),
            // integrands carry r^(alpha-2) at worst, times r from the area element
            singularity: Some(Singularity {
                point: [0.0, 0.0],
                weight_exponent: alpha - 1.0,
            }),
        })
    }

    /// `u = c0 + c1 x + c2 y`.
    pub fn linear(c: [f64; 3]) -> ManufacturedCase {
        ManufacturedCase {
            name: "linear".into(),
            regularity: "polynomial".into(),
            u: Arc::new(move |p| c[0] + c[1] * p[0] + c[2] * p[1]),
            grad: Arc::new(move |_| [c[1], c[2]]),
            hessian: Arc::new(|_| [[0.0; 2]; 2]),
            singularity: None,
        }
    }

    pub fn u(&self) -> CaseField {
        CaseField {
            f: self.u.clone(),
            singularity: self.singularity,
        }
    }

    pub fn grad_u(&self) -> CaseGradient {
        CaseGradient {
            f: self.grad.clone(),
            singularity: self.singularity,
        }
    }

    pub fn hessian(&self, p: Point) -> Tensor {
        (self.hessian)(p)
    }

    /// `f = -div(a grad u)` for a constant tensor `a`.
    pub fn source(&self, a: Tensor) -> CaseField {
        let h = self.hessian.clone();
        CaseField {
            f: Arc::new(move |p| {
                let m = h(p);
                -(a[0][0] * m[0][0] + a[0][1] * m[1][0] + a[1][0] * m[0][1] + a[1][1] * m[1][1])
            }),
            singularity: self.singularity,
        }
    }

    pub fn boundary(&self) -> CaseField {
        self.u()
    }
}
