//! Primal assembly of one support and one thin-walled component into the system ROM.
//!
//! System coordinates are `[q_b; η_Γ; η⁽¹⁾; η⁽²⁾]`; the support component is stacked as
//! `[q_b; η_Γ; η⁽¹⁾]` and the thin-walled one as `[η_Γ; η⁽²⁾]`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cms::ReducedComponent;
use crate::condensation::GeomForceCoefficients;
use crate::contact::{contact_nodal_forces, ContactPatch, ContactState};
use crate::error::{Error, Result};
use crate::io;
use crate::linalg::{relative_asymmetry, symmetrize};

/// Boolean coupling map `L` for `(B, M_Γ, M⁽¹⁾, M⁽²⁾)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingMap {
    pub nb: usize,
    pub ng: usize,
    pub m1: usize,
    pub m2: usize,
}

impl CouplingMap {
    pub fn new(nb: usize, ng: usize, m1: usize, m2: usize) -> Self {
        Self { nb, ng, m1, m2 }
    }

    /// Checks that both components carry the same interface columns.
    pub fn build(support: &ReducedComponent, thin: &ReducedComponent) -> Result<Self> {
        let (s, t) = (&support.basis, &thin.basis);
        if s.n_interface() != t.n_interface() {
            return Err(Error::InterfaceMismatch(format!(
                "{} interface columns on the support, {} on the thin-walled region",
                s.n_interface(),
                t.n_interface()
            )));
        }
        for (k, (a, b)) in s.interface_columns.iter().zip(&t.interface_columns).enumerate() {
            if (a.a, a.b, a.direction) != (b.a, b.b, b.direction) {
                return Err(Error::InterfaceMismatch(format!(
                    "column {k} is {}:{}:{} on the support and {}:{}:{} on the thin-walled region",
                    a.a, a.b, a.direction, b.a, b.b, b.direction
                )));
            }
        }
        if t.n_boundary() != 0 {
            return Err(Error::Parameter("thin-walled component must not carry contact coordinates".into()));
        }
        Ok(Self::new(s.n_boundary(), s.n_interface(), s.n_modes(), t.n_modes()))
    }

    pub fn n_system(&self) -> usize {
        self.nb + self.ng + self.m1 + self.m2
    }

    pub fn n_support(&self) -> usize {
        self.nb + self.ng + self.m1
    }

    pub fn n_thin(&self) -> usize {
        self.ng + self.m2
    }

    /// System index of thin-walled component coordinate `k`.
    pub fn thin_index(&self, k: usize) -> usize {
        if k < self.ng {
            self.nb + k
        } else {
            self.nb + self.ng + self.m1 + (k - self.ng)
        }
    }

    /// `L` with rows `[support; thin]` and system columns.
    pub fn matrix(&self) -> DMatrix<f64> {
        let ns = self.n_support();
        let mut l = DMatrix::zeros(ns + self.n_thin(), self.n_system());
        for k in 0..ns {
            l[(k, k)] = 1.0;
        }
        for k in 0..self.n_thin() {
            l[(ns + k, self.thin_index(k))] = 1.0;
        }
        l
    }

    /// `Lᵀ diag(A⁽¹⁾, A⁽²⁾) L`.
    pub fn assemble(&self, support: &DMatrix<f64>, thin: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n_system();
        let ns = self.n_support();
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (ns, ns)).copy_from(support);
        for i in 0..self.n_thin() {
            for j in 0..self.n_thin() {
                a[(self.thin_index(i), self.thin_index(j))] += thin[(i, j)];
            }
        }
        a
    }

    pub fn support_coords(&self, q: &DVector<f64>) -> DVector<f64> {
        q.rows(0, self.n_support()).into_owned()
    }

    pub fn thin_coords(&self, q: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n_thin(), |k, _| q[self.thin_index(k)])
    }

    /// `Lᵀ [f⁽¹⁾; f⁽²⁾]`.
    pub fn gather_force(&self, support: Option<&DVector<f64>>, thin: Option<&DVector<f64>>) -> DVector<f64> {
        let mut f = DVector::zeros(self.n_system());
        if let Some(s) = support {
            f.rows_mut(0, self.n_support()).copy_from(s);
        }
        if let Some(t) = thin {
            for k in 0..self.n_thin() {
                f[self.thin_index(k)] += t[k];
            }
        }
        f
    }
}

/// Nonlinear force and its Jacobian at one state.
#[derive(Debug, Clone)]
pub struct NonlinearForce {
    pub force: DVector<f64>,
    pub jacobian: DMatrix<f64>,
}

/// Assembled system `M̃ q̈ + K̃ q + h̃(q) = f̃_ext`.
#[derive(Debug, Clone)]
pub struct SystemRom {
    pub coupling: CouplingMap,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// Reduced geometric force on thin-walled component coordinates.
    pub geometry: Option<GeomForceCoefficients>,
    /// Frictional contact on the `q_b` block; `None` when the contact is tied and `q_b` is removed.
    pub contact: Option<ContactPatch>,
}

/// Drops the first `nb` rows and columns (tied contact: `q_b ≡ 0`).
fn without_boundary(a: &DMatrix<f64>, nb: usize) -> DMatrix<f64> {
    let n = a.nrows() - nb;
    a.view((nb, nb), (n, n)).into_owned()
}

/// Assembles `M̃`, `K̃` and the nonlinear-force layout. A tied or absent contact patch
/// removes the contact coordinates.
pub fn assemble_system(
    support: &ReducedComponent,
    thin: &ReducedComponent,
    geometry: Option<GeomForceCoefficients>,
    contact: Option<ContactPatch>,
) -> Result<SystemRom> {
    let full = CouplingMap::build(support, thin)?;
    let contact = contact.filter(|c| !c.tied);
    let (coupling, ms, ks) = match &contact {
        Some(c) => {
            if c.n_gaps() != full.nb {
                return Err(Error::Dimension {
                    what: "contact gaps",
                    expected: full.nb,
                    got: c.n_gaps(),
                });
            }
            (full.clone(), support.mass.clone(), support.stiffness.clone())
        }
        None => (
            CouplingMap::new(0, full.ng, full.m1, full.m2),
            without_boundary(&support.mass, full.nb),
            without_boundary(&support.stiffness, full.nb),
        ),
    };
    if let Some(g) = &geometry {
        if g.n != coupling.n_thin() {
            return Err(Error::Dimension {
                what: "geometric force coefficients",
                expected: coupling.n_thin(),
                got: g.n,
            });
        }
    }
    let mut mass = coupling.assemble(&ms, &thin.mass);
    let mut stiffness = coupling.assemble(&ks, &thin.stiffness);
    symmetrize(&mut mass);
    symmetrize(&mut stiffness);
    if mass.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite("assembled reduced mass matrix".into()));
    }
    Ok(SystemRom {
        coupling,
        mass,
        stiffness,
        geometry,
        contact,
    })
}

impl SystemRom {
    pub fn dim(&self) -> usize {
        self.coupling.n_system()
    }

    pub fn n_gaps(&self) -> usize {
        self.coupling.nb
    }

    pub fn gaps(&self, q: &DVector<f64>) -> DVector<f64> {
        q.rows(0, self.coupling.nb).into_owned()
    }

    /// Fresh contact history matching this system.
    pub fn contact_state(&self) -> Option<ContactState> {
        self.contact.as_ref().map(ContactState::new)
    }

    /// `h̃ = [f_con,b; f̃_geom,Γ; 0; f̃_geom,i]` with its Jacobian.
    pub fn nonlinear_force(&self, q: &DVector<f64>, state: Option<&ContactState>) -> Result<NonlinearForce> {
        let n = self.dim();
        if q.len() != n {
            return Err(Error::Dimension {
                what: "system state",
                expected: n,
                got: q.len(),
            });
        }
        let mut force = DVector::zeros(n);
        let mut jacobian = DMatrix::zeros(n, n);
        if let Some(patch) = &self.contact {
            let fresh;
            let state = match state {
                Some(s) => s,
                None => {
                    fresh = ContactState::new(patch);
                    &fresh
                }
            };
            let c = contact_nodal_forces(patch, state, &self.gaps(q))?;
            force.rows_mut(0, self.coupling.nb).copy_from(&c.force);
            for (i, kt) in c.tangent.iter().enumerate() {
                jacobian.view_mut((3 * i, 3 * i), (3, 3)).copy_from(kt);
            }
        }
        if let Some(g) = &self.geometry {
            let qt = self.coupling.thin_coords(q);
            let f = g.eval(&qt);
            let j = g.jacobian(&qt);
            let map = |k| self.coupling.thin_index(k);
            for a in 0..self.coupling.n_thin() {
                force[map(a)] += f[a];
                for b in 0..self.coupling.n_thin() {
                    jacobian[(map(a), map(b))] += j[(a, b)];
                }
            }
        }
        Ok(NonlinearForce { force, jacobian })
    }

    /// `r = M̃ q̈ + K̃ q + h̃(q) − f_ext` and `∂r/∂q`.
    pub fn residual(
        &self,
        q: &DVector<f64>,
        qdd: &DVector<f64>,
        f_ext: &DVector<f64>,
        state: Option<&ContactState>,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let h = self.nonlinear_force(q, state)?;
        let r = &self.mass * qdd + &self.stiffness * q + h.force - f_ext;
        Ok((r, &self.stiffness + h.jacobian))
    }

    /// Thin-walled load `Tᵀ f` on system coordinates.
    pub fn thin_load(&self, thin: &ReducedComponent, f: &DVector<f64>) -> DVector<f64> {
        self.coupling.gather_force(None, Some(&thin.project_force(f)))
    }

    /// Thin-walled component displacement field of a system state.
    pub fn thin_displacement(&self, thin: &ReducedComponent, q: &DVector<f64>) -> DVector<f64> {
        thin.expand(&self.coupling.thin_coords(q))
    }

    /// Relative asymmetry of `M̃` and `K̃` (zero after assembly).
    pub fn asymmetry(&self) -> f64 {
        relative_asymmetry(&self.mass).max(relative_asymmetry(&self.stiffness))
    }

    /// Writes `coupling.toml`, `mass.mtx` and `stiffness.mtx`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let text = toml::to_string(&self.coupling).map_err(|e| Error::Parameter(e.to_string()))?;
        io::write_text(
            &dir.join("coupling.toml"),
            &format!("# system layout [q_b; eta_gamma; eta_support; eta_thin]\n{text}"),
        )?;
        io::write_text(&dir.join("mass.mtx"), &io::dense_to_mtx(&self.mass))?;
        io::write_text(&dir.join("stiffness.mtx"), &io::dense_to_mtx(&self.stiffness))?;
        Ok(())
    }
}
