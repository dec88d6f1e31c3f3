//! Shared scenarios for the integration suites.
#![allow(dead_code)]

use paspeed::forward::{simulate, BoundaryTrace, Grid, SensorShell};
use paspeed::geom::Vec3;
use paspeed::medium::{BallInclusion, Hole, SourceSpec, SpeedField};
use paspeed::recon::Scenario;
use std::sync::OnceLock;

pub const N: usize = 128;
pub const HALF_WIDTH: f64 = 1.98;
pub const DURATION: f64 = 3.0;
pub const RADIUS: f64 = 0.12;

pub fn source() -> SourceSpec {
    SourceSpec::single(Vec3::new(0.01, -0.02, 0.015), 0.42, 1.0, 4)
}

pub fn homogeneous() -> SpeedField {
    SpeedField { omega_radius: 0.48, ..SpeedField::homogeneous(1.0, 0.6) }
}

pub fn with_inclusions(inclusions: Vec<BallInclusion>) -> SpeedField {
    SpeedField { inclusions, ..homogeneous() }
}

pub fn two_inclusion() -> SpeedField {
    with_inclusions(vec![
        BallInclusion::ball(Vec3::new(0.22, 0.1, 0.05), RADIUS, 0.85),
        BallInclusion::ball(Vec3::new(-0.2, -0.15, -0.08), RADIUS, 1.1),
    ])
}

pub fn fast_single(center: Vec3, speed: f64) -> SpeedField {
    with_inclusions(vec![BallInclusion::ball(center, RADIUS, speed)])
}

/// Slow ball of radius 0.4 with an off-centre background-speed hole of radius 0.18.
pub fn holed() -> SpeedField {
    let center = Vec3::new(-0.05, 0.03, 0.02);
    let hole = center + Vec3::new(0.8, 0.6, 0.0) * 0.2;
    with_inclusions(vec![BallInclusion { center, radius: 0.4, speed: 0.9, holes: vec![Hole { center: hole, radius: 0.18 }] }])
}

pub fn grid(n: usize, field: &SpeedField) -> Grid {
    Grid::new(n, HALF_WIDTH, 16, field.max_speed().max(1.1), 0.9, DURATION).unwrap()
}

pub fn shell(grid: &Grid) -> SensorShell {
    SensorShell::fibonacci(512, 0.5, 2.0 * grid.h())
}

pub fn scenario(field: SpeedField) -> Scenario {
    let g = grid(N, &field);
    Scenario { field, source: source(), shell: shell(&g), grid: g }
}

pub fn run(s: &Scenario) -> BoundaryTrace {
    simulate(&s.field, &s.source, &s.grid, &s.shell).unwrap().0
}

/// Simulated once per test binary.
pub fn trace_of(cell: &'static OnceLock<BoundaryTrace>, field: fn() -> SpeedField) -> &'static BoundaryTrace {
    cell.get_or_init(|| run(&scenario(field())))
}

pub fn homogeneous_trace() -> &'static BoundaryTrace {
    static CELL: OnceLock<BoundaryTrace> = OnceLock::new();
    trace_of(&CELL, homogeneous)
}

pub fn two_inclusion_trace() -> &'static BoundaryTrace {
    static CELL: OnceLock<BoundaryTrace> = OnceLock::new();
    trace_of(&CELL, two_inclusion)
}
