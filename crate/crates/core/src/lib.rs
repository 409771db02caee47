//! Signed-distance coordinate systems around parametric surfaces and curves.

pub mod chart;
pub mod error;
pub mod expr;
pub mod fd;
pub mod jet;
pub mod linalg;
pub mod field;
pub mod surface_frames;
pub mod closest_point;
pub mod surface_calculus;
pub mod surface_evolution;
pub mod curve_frames;
pub mod tube_calculus;
pub mod asymptotics;
pub mod oracle;
pub mod spec;
pub mod suites;

pub use chart::{ChartJet, CurveChart, SurfaceChart};
pub use error::{Error, Result};
pub use expr::{parse_expr, Expr, Var};
pub use fd::fd_derivative;
pub use jet::{Jet, Scalar};
pub use linalg::{Tensor2, Vec3, M3, V3};
pub use field::{ScalarField, VectorField};
pub use surface_frames::{CurvatureData, DarbouxFrame, FrameKind, SurfaceGeometry};
pub use closest_point::{ProjectOptions, Projector, SdfCoordinates};
pub use surface_calculus::{Collar, OpValue, Operand, SurfaceOp};
pub use surface_evolution::{EvolvingSurface, MovingCollar, SurfaceMotion};
pub use curve_frames::{BishopTable, FrenetFrame, Tube, TubeCoordinates, TubeFrame};
pub use tube_calculus::{MovingTube, TubeGeometry, TubeOp};
pub use asymptotics::{EpsSeries, LayerFields, LayerGeometry, LayerOp, LayerPoint, SlopeReport};
pub use oracle::{AmbientField, CompareOptions, CompareReport, FdSteps};
pub use spec::{CurveSpec, FieldSpec, Geometry, GeometrySpec, SurfaceSpec};
pub use suites::{run_suite, Check, SuiteConfig, SuiteKind, SuiteReport};
