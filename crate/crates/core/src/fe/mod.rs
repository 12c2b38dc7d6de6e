//! Hexahedral St. Venant–Kirchhoff finite elements and the clamped-panel benchmark.

pub mod benchmark;
pub mod buckling;
pub mod hex8;
pub mod material;
pub mod mesh;
pub mod model;
pub mod statics;

pub use benchmark::{build_benchmark_model, Benchmark, BenchmarkParams, ContactLayout, Region};
pub use buckling::{buckling_analysis, linear_buckling, Buckling, BUCKLING_CUTOFF};
pub use material::Material;
pub use mesh::{sets, Mesh};
pub use model::{Constraints, DofMap, FullOrderModel};
pub use statics::{solve_nonlinear_static, solve_static_path, NewtonOptions, StaticSolution, StepRecord};
