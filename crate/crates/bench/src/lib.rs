//! Fixtures shared by the `kernels` benchmark.

use sdcalc_core::{CurveChart, Operand, ScalarField, SurfaceChart, Tube, Vec3, VectorField};

pub fn torus() -> SurfaceChart {
    SurfaceChart::torus(2.0, 0.7)
}

pub fn helix_tube() -> Tube {
    Tube::new(CurveChart::helix(1.0, 0.3), 0.0).expect("helix tube")
}

/// Ambient points in a ring around the torus tube.
pub fn torus_points(n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|i| {
            let t = i as f64 * 2.399_963;
            let r = 2.0 + 0.9 * (3.0 * t).cos();
            Vec3::new(r * t.cos(), r * t.sin(), 0.9 * (3.0 * t).sin())
        })
        .collect()
}

pub fn scalar_field() -> Operand {
    Operand::Scalar(ScalarField::parse("x*y*z + sin(x) + z*z").expect("field"))
}

pub fn vector_field() -> Operand {
    Operand::Vector(VectorField::ambient(["y*z", "sin(x) + z", "x*x*y"]).expect("field"))
}
