//! Reduced components of the clamped-panel benchmark.

use nalgebra::DVector;

use crate::cms::{
    compute_component_basis, reduce_component, DofMirror, DofPartition, GapTransform, ModeSelection,
    ReducedComponent, RegionKind,
};
use crate::contact::{ContactParams, ContactPatch};
use crate::error::{Error, Result};
use crate::fe::{sets, Benchmark, FullOrderModel, Region};
use crate::interface::{build_interface_basis, InterfaceBasis, InterfacePatch, SymmetryFilter};

/// Basis sizes shared by both regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionOptions {
    /// Polynomial degree of the interface functions.
    pub degree: usize,
    /// Retained interface columns `M_Γ`.
    pub interface_modes: usize,
    /// Support-region normal modes `M⁽¹⁾`.
    pub support_modes: usize,
    /// Thin-walled normal modes `M⁽²⁾`.
    pub thin_modes: usize,
    /// Keep only fields even in `y` (loads and geometry are symmetric).
    pub symmetric: bool,
    /// Optional frequency band (Hz) for the support normal modes.
    pub support_band_hz: Option<(f64, f64)>,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            degree: 1,
            interface_modes: 3,
            support_modes: 3,
            thin_modes: 3,
            symmetric: true,
            support_band_hz: None,
        }
    }
}

fn patch(region: &Region) -> Result<InterfacePatch> {
    let nodes = region.mesh.node_set(sets::INTERFACE)?;
    InterfacePatch::from_mesh(&region.mesh, nodes, [1, 2])
}

/// Interface basis of a region truncated to `M_Γ` columns.
pub fn interface_basis(region: &Region, opts: &ReductionOptions) -> Result<InterfaceBasis> {
    let filter = if opts.symmetric {
        SymmetryFilter::EvenIn { mirror_dir: 1 }
    } else {
        SymmetryFilter::None
    };
    build_interface_basis(&patch(region)?, opts.degree, filter)?.truncated(opts.interface_modes)
}

fn mirror_filter(model: &FullOrderModel, symmetric: bool) -> Result<Option<DofMirror>> {
    symmetric.then(|| DofMirror::build(model)).transpose()
}

/// Support region: fixed base, contact pairs as gap coordinates in `b`.
#[derive(Debug, Clone)]
pub struct SupportComponent {
    pub model: FullOrderModel,
    pub gap: GapTransform,
    pub reduced: ReducedComponent,
}

/// Thin-walled region: symmetry plane only, `b` empty.
#[derive(Debug, Clone)]
pub struct ThinComponent {
    pub model: FullOrderModel,
    pub reduced: ReducedComponent,
}

pub fn reduce_support(bench: &Benchmark, opts: &ReductionOptions) -> Result<SupportComponent> {
    let model = bench.support_model(false)?;
    let gap = GapTransform::build(&model, &bench.support_pairs())?;
    let k = gap.transform_matrix(model.stiffness());
    let m = gap.transform_matrix(model.mass());
    let iface = interface_basis(&bench.support, opts)?;
    let nodes = bench.support.mesh.node_set(sets::INTERFACE)?;
    let partition = DofPartition::new(
        model.n_dofs(),
        gap.gap_slots(),
        DofPartition::interface_eqs(&model, nodes)?,
    )?;
    let mirror = mirror_filter(&model, opts.symmetric)?;
    let keep = mirror.as_ref().map(|mi| {
        let g = gap.clone();
        move |v: &DVector<f64>| mi.is_symmetric(&g.to_absolute(v))
    });
    let basis = compute_component_basis(
        &k,
        &m,
        &partition,
        &iface,
        ModeSelection {
            count: opts.support_modes,
            band_hz: opts.support_band_hz,
        },
        keep.as_ref().map(|f| f as &dyn Fn(&DVector<f64>) -> bool),
    )?;
    let reduced = reduce_component(RegionKind::Support, &k, &m, basis)?;
    Ok(SupportComponent { model, gap, reduced })
}

pub fn reduce_thin(bench: &Benchmark, opts: &ReductionOptions) -> Result<ThinComponent> {
    let model = bench.thin_model()?;
    let iface = interface_basis(&bench.thin, opts)?;
    let nodes = bench.thin.mesh.node_set(sets::INTERFACE)?;
    let partition = DofPartition::new(model.n_dofs(), vec![], DofPartition::interface_eqs(&model, nodes)?)?;
    let mirror = mirror_filter(&model, opts.symmetric)?;
    let keep = mirror.as_ref().map(|mi| move |v: &DVector<f64>| mi.is_symmetric(v));
    let basis = compute_component_basis(
        model.stiffness(),
        model.mass(),
        &partition,
        &iface,
        ModeSelection {
            count: opts.thin_modes,
            band_hz: None,
        },
        keep.as_ref().map(|f| f as &dyn Fn(&DVector<f64>) -> bool),
    )?;
    let reduced = reduce_component(RegionKind::ThinWalled, model.stiffness(), model.mass(), basis)?;
    Ok(ThinComponent { model, reduced })
}

impl ThinComponent {
    /// Global node displacement of a thin-region node for reduced coordinates `q̃`.
    pub fn node_displacement(&self, bench: &Benchmark, q: &DVector<f64>, global: usize) -> Result<nalgebra::Vector3<f64>> {
        let local = bench
            .thin
            .local(global)
            .ok_or_else(|| Error::Parameter(format!("node {global} is not in the thin-walled region")))?;
        Ok(self.model.node_displacement(&self.reduced.expand(q), local))
    }
}

/// Contact patch on the support's gap coordinates (pair order of the benchmark layout).
pub fn support_contact(bench: &Benchmark, params: &ContactParams) -> Result<ContactPatch> {
    ContactPatch::new(params, &bench.contact.xy, &bench.contact.weights)
}
