//! Scalar and vector fields sampled by the projections and load integrals.

pub type Point = [f64; 2];

/// A point singularity of the form `r^(exponent) * smooth`, `r` the distance
/// to `point`, that quadrature must resolve.
///
/// `weight_exponent` is the power of the radial coordinate carried by every
/// integrand built from the field once the area Jacobian is included. It must
/// exceed -1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub point: Point,
    pub weight_exponent: f64,
}

pub trait ScalarField: Sync {
    fn value(&self, p: Point) -> f64;

    fn singularity(&self) -> Option<Singularity> {
        None
    }
}

impl<F> ScalarField for F
where
    F: Fn(Point) -> f64 + Sync,
{
    fn value(&self, p: Point) -> f64 {
        self(p)
    }
}

/// Wraps a closure and tags it with a singularity.
pub struct SingularField<F> {
    pub f: F,
    pub singularity: Singularity,
}

impl<F> ScalarField for SingularField<F>
where
    F: Fn(Point) -> f64 + Sync,
{
    fn value(&self, p: Point) -> f64 {
        (self.f)(p)
    }

    fn singularity(&self) -> Option<Singularity> {
        Some(self.singularity)
    }
}

pub trait VectorField: Sync {
    fn value(&self, p: Point) -> [f64; 2];

    fn singularity(&self) -> Option<Singularity> {
        None
    }
}

impl<F> VectorField for F
where
    F: Fn(Point) -> [f64; 2] + Sync,
{
    fn value(&self, p: Point) -> [f64; 2] {
        self(p)
    }
}

/// One Cartesian component of a vector field.
pub struct Component<'a, V: ?Sized> {
    pub field: &'a V,
    pub index: usize,
}

impl<V: VectorField + ?Sized> ScalarField for Component<'_, V> {
    fn value(&self, p: Point) -> f64 {
        self.field.value(p)[self.index]
    }

    fn singularity(&self) -> Option<Singularity> {
        self.field.singularity()
    }
}
