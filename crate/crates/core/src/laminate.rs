//! Classical laminate theory for the piezo-composite actuator.
//!
//! The PZT layer is loaded through the thermal analogy: its free strain
//! `d31 * V / t_pzt` enters the laminate exactly like an isotropic thermal
//! expansion, so cure residual curvature and electrical actuation share one
//! solver. All quantities are SI; z is measured from the laminate mid-plane
//! with ply 0 at the bottom.

use std::ops::Add;

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{validation, Error, Result};

/// Cooldown from the 177 °C autoclave cure to 25 °C room temperature.
pub const DEFAULT_CURE_DELTA_T: f64 = 25.0 - 177.0;

/// Peak-to-peak drive limit above which PZT domain switching is a risk.
pub const DEFAULT_MAX_VPP: f64 = 160.0;

const MAX_CONDITION: f64 = 1e12;

/// In-plane elastic, thermal and piezoelectric constants of one material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub e1: f64,
    pub e2: f64,
    pub g12: f64,
    pub nu12: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Transverse piezoelectric strain coefficient (m/V). Zero for passive materials.
    pub d31: f64,
}

impl Material {
    /// PZT3203 HD piezoceramic.
    pub const PZT3203HD: Material = Material {
        e1: 62e9,
        e2: 62e9,
        g12: 23.7e9,
        nu12: 0.31,
        alpha1: 3.5e-6,
        alpha2: 3.5e-6,
        d31: -320e-12,
    };

    /// Unidirectional carbon/epoxy prepreg.
    pub const CARBON_EPOXY: Material = Material {
        e1: 231.2e9,
        e2: 7.2e9,
        g12: 4.3e9,
        nu12: 0.29,
        alpha1: -1.58e-6,
        alpha2: 32.2e-6,
        d31: 0.0,
    };

    /// Woven glass/epoxy.
    pub const GLASS_EPOXY: Material = Material {
        e1: 21.7e9,
        e2: 21.7e9,
        g12: 3.99e9,
        nu12: 0.13,
        alpha1: 14.2e-6,
        alpha2: 14.2e-6,
        d31: 0.0,
    };

    pub fn nu21(&self) -> f64 {
        self.nu12 * self.e2 / self.e1
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.e1,
            self.e2,
            self.g12,
            self.nu12,
            self.alpha1,
            self.alpha2,
            self.d31,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(validation("material constants must be finite"));
        }
        if self.e1 <= 0.0 || self.e2 <= 0.0 || self.g12 <= 0.0 {
            return Err(validation(format!(
                "moduli must be positive (e1 = {}, e2 = {}, g12 = {})",
                self.e1, self.e2, self.g12
            )));
        }
        // 1 - nu12 * nu21 > 0 is the positive-definiteness condition of Q.
        if self.nu12 * self.nu12 >= self.e1 / self.e2 {
            return Err(validation(format!(
                "nu12 = {} violates the reciprocal bound nu12^2 < e1/e2 = {}",
                self.nu12,
                self.e1 / self.e2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ply {
    pub material: Material,
    /// Thickness (m).
    pub thickness: f64,
    /// Lay-up angle of the 1-axis from the laminate x-axis (rad).
    pub angle: f64,
}

impl Ply {
    pub fn new(material: Material, thickness: f64, angle: f64) -> Result<Self> {
        let ply = Ply {
            material,
            thickness,
            angle,
        };
        ply.validate()?;
        Ok(ply)
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if !(self.thickness > 0.0 && self.thickness.is_finite()) {
            return Err(validation(format!(
                "ply thickness must be positive, got {}",
                self.thickness
            )));
        }
        if !self.angle.is_finite() {
            return Err(validation("ply angle must be finite"));
        }
        Ok(())
    }

    /// Free thermal strain per kelvin in laminate axes `[x, y, gamma_xy]`.
    pub fn thermal_expansion(&self) -> Vector3<f64> {
        let (s, c) = self.angle.sin_cos();
        let m = &self.material;
        Vector3::new(
            m.alpha1 * c * c + m.alpha2 * s * s,
            m.alpha1 * s * s + m.alpha2 * c * c,
            2.0 * (m.alpha1 - m.alpha2) * s * c,
        )
    }
}

/// On-axis reduced stiffness `Q` of a ply under plane stress.
pub fn reduced_stiffness(ply: &Ply) -> Result<Matrix3<f64>> {
    ply.validate()?;
    let m = &ply.material;
    let denom = 1.0 - m.nu12 * m.nu21();
    let q11 = m.e1 / denom;
    let q22 = m.e2 / denom;
    let q12 = m.nu12 * m.e2 / denom;
    Ok(Matrix3::new(
        q11, q12, 0.0, //
        q12, q22, 0.0, //
        0.0, 0.0, m.g12,
    ))
}

/// Reduced stiffness rotated into laminate axes (`Q-bar`).
pub fn transformed_stiffness(ply: &Ply) -> Result<Matrix3<f64>> {
    let q = reduced_stiffness(ply)?;
    let (s, c) = ply.angle.sin_cos();
    let (q11, q12, q22, q66) = (q[(0, 0)], q[(0, 1)], q[(1, 1)], q[(2, 2)]);
    let (c2, s2) = (c * c, s * s);
    let (c4, s4, s2c2) = (c2 * c2, s2 * s2, s2 * c2);

    let b11 = q11 * c4 + 2.0 * (q12 + 2.0 * q66) * s2c2 + q22 * s4;
    let b12 = (q11 + q22 - 4.0 * q66) * s2c2 + q12 * (s4 + c4);
    let b22 = q11 * s4 + 2.0 * (q12 + 2.0 * q66) * s2c2 + q22 * c4;
    let b16 = (q11 - q12 - 2.0 * q66) * s * c * c2 + (q12 - q22 + 2.0 * q66) * s * s2 * c;
    let b26 = (q11 - q12 - 2.0 * q66) * s * s2 * c + (q12 - q22 + 2.0 * q66) * s * c * c2;
    let b66 = (q11 + q22 - 2.0 * q12 - 2.0 * q66) * s2c2 + q66 * (s4 + c4);

    Ok(Matrix3::new(
        b11, b12, b16, //
        b12, b22, b26, //
        b16, b26, b66,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaminateStack {
    /// Plies ordered bottom to top.
    pub plies: Vec<Ply>,
    /// Active length between the simple supports (m).
    pub span: f64,
    pub width: f64,
    /// Index of the electroded PZT ply.
    pub pzt_index: usize,
}

impl LaminateStack {
    pub fn new(plies: Vec<Ply>, span: f64, width: f64, pzt_index: usize) -> Result<Self> {
        let stack = LaminateStack {
            plies,
            span,
            width,
            pzt_index,
        };
        stack.validate()?;
        Ok(stack)
    }

    /// Glass 0.09 mm / PZT 0.1 mm / carbon 0.1 mm / glass 0.09 mm on a
    /// 12 mm x 4 mm active area.
    pub fn lipca_preset() -> Self {
        LaminateStack {
            plies: vec![
                Ply {
                    material: Material::GLASS_EPOXY,
                    thickness: 0.09e-3,
                    angle: 0.0,
                },
                Ply {
                    material: Material::PZT3203HD,
                    thickness: 0.1e-3,
                    angle: 0.0,
                },
                Ply {
                    material: Material::CARBON_EPOXY,
                    thickness: 0.1e-3,
                    angle: 0.0,
                },
                Ply {
                    material: Material::GLASS_EPOXY,
                    thickness: 0.09e-3,
                    angle: 0.0,
                },
            ],
            span: 12e-3,
            width: 4e-3,
            pzt_index: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.plies.is_empty() {
            return Err(validation("laminate has no plies"));
        }
        for (k, ply) in self.plies.iter().enumerate() {
            ply.validate().map_err(|e| validation(format!("ply {k}: {e}")))?;
        }
        if self.pzt_index >= self.plies.len() {
            return Err(validation(format!(
                "pzt_index {} out of range for {} plies",
                self.pzt_index,
                self.plies.len()
            )));
        }
        if let Some(k) = self
            .plies
            .iter()
            .enumerate()
            .position(|(k, p)| k != self.pzt_index && p.material.d31 != 0.0)
        {
            return Err(validation(format!(
                "ply {k} has nonzero d31 but is not the PZT ply {}",
                self.pzt_index
            )));
        }
        if !(self.span > 0.0 && self.span.is_finite()) {
            return Err(validation(format!("span must be positive, got {}", self.span)));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(validation(format!("width must be positive, got {}", self.width)));
        }
        Ok(())
    }

    pub fn thickness(&self) -> f64 {
        self.plies.iter().map(|p| p.thickness).sum()
    }

    /// Ply interface coordinates `z_0 .. z_n`, bottom to top.
    pub fn interfaces(&self) -> Vec<f64> {
        let mut z = -0.5 * self.thickness();
        let mut out = Vec::with_capacity(self.plies.len() + 1);
        out.push(z);
        for ply in &self.plies {
            z += ply.thickness;
            out.push(z);
        }
        out
    }

    /// Same plies in reverse order, PZT index following its ply.
    pub fn mirrored(&self) -> Self {
        let mut plies = self.plies.clone();
        plies.reverse();
        LaminateStack {
            pzt_index: self.plies.len() - 1 - self.pzt_index,
            plies,
            span: self.span,
            width: self.width,
        }
    }
}

/// Extensional, coupling and bending stiffness blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abd {
    pub a: Matrix3<f64>,
    pub b: Matrix3<f64>,
    pub d: Matrix3<f64>,
}

impl Abd {
    pub fn full(&self) -> Matrix6<f64> {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.a);
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&self.b);
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&self.b);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.d);
        m
    }
}

pub fn abd_matrix(stack: &LaminateStack) -> Result<Abd> {
    stack.validate()?;
    let z = stack.interfaces();
    let mut abd = Abd {
        a: Matrix3::zeros(),
        b: Matrix3::zeros(),
        d: Matrix3::zeros(),
    };
    for (k, ply) in stack.plies.iter().enumerate() {
        let q = transformed_stiffness(ply)?;
        let (lo, hi) = (z[k], z[k + 1]);
        abd.a += q * (hi - lo);
        abd.b += q * ((hi * hi - lo * lo) / 2.0);
        abd.d += q * ((hi.powi(3) - lo.powi(3)) / 3.0);
    }
    Ok(abd)
}

/// Force and moment resultants per unit width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resultants {
    /// N/m.
    pub n: Vector3<f64>,
    /// N.
    pub m: Vector3<f64>,
}

impl Resultants {
    pub fn zero() -> Self {
        Resultants {
            n: Vector3::zeros(),
            m: Vector3::zeros(),
        }
    }
}

impl Add for Resultants {
    type Output = Resultants;

    fn add(self, rhs: Resultants) -> Resultants {
        Resultants {
            n: self.n + rhs.n,
            m: self.m + rhs.m,
        }
    }
}

/// Mid-plane strain and curvature of the laminate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateState {
    pub eps0: Vector3<f64>,
    /// 1/m.
    pub kappa: Vector3<f64>,
}

impl PlateState {
    pub fn zero() -> Self {
        PlateState {
            eps0: Vector3::zeros(),
            kappa: Vector3::zeros(),
        }
    }
}

impl Add for PlateState {
    type Output = PlateState;

    fn add(self, rhs: PlateState) -> PlateState {
        PlateState {
            eps0: self.eps0 + rhs.eps0,
            kappa: self.kappa + rhs.kappa,
        }
    }
}

/// Kinematic assumption for the bending solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BendingMode {
    /// Free plate: all six strain/curvature components solved.
    #[default]
    Plate,
    /// Cylindrical bending: transverse curvature held at zero.
    Cylindrical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VoltageEnvelope {
    /// Instantaneous |V| is saturated at half the given peak-to-peak value.
    Clamp { max_vpp: f64 },
    /// No saturation; drives beyond the default limit are logged.
    Unbounded,
}

impl Default for VoltageEnvelope {
    fn default() -> Self {
        VoltageEnvelope::Clamp {
            max_vpp: DEFAULT_MAX_VPP,
        }
    }
}

/// Electrical actuation options.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuationModel {
    /// Field nonlinearity of d31, `d31_eff = d31 * (1 + beta * |E|)` (m/V).
    /// Zero selects the linear model.
    pub beta: f64,
    pub envelope: VoltageEnvelope,
    pub bending: BendingMode,
}

impl ActuationModel {
    pub fn linear() -> Self {
        Self::default()
    }

    pub fn is_linear(&self) -> bool {
        self.beta == 0.0
    }

    fn limit_voltage(&self, voltage: f64) -> f64 {
        match self.envelope {
            VoltageEnvelope::Clamp { max_vpp } => {
                let peak = 0.5 * max_vpp;
                voltage.clamp(-peak, peak)
            }
            VoltageEnvelope::Unbounded => {
                if voltage.abs() > 0.5 * DEFAULT_MAX_VPP {
                    log::warn!(
                        "drive of {:.1} V exceeds the {DEFAULT_MAX_VPP} Vp-p envelope; \
                         domain switching is not modelled",
                        voltage
                    );
                }
                voltage
            }
        }
    }
}

fn free_strain_resultants(
    stack: &LaminateStack,
    free_strain: impl Fn(usize, &Ply) -> Vector3<f64>,
) -> Result<Resultants> {
    let z = stack.interfaces();
    let mut out = Resultants::zero();
    for (k, ply) in stack.plies.iter().enumerate() {
        let strain = free_strain(k, ply);
        if strain == Vector3::zeros() {
            continue;
        }
        let stress = transformed_stiffness(ply)? * strain;
        let (lo, hi) = (z[k], z[k + 1]);
        out.n += stress * (hi - lo);
        out.m += stress * ((hi * hi - lo * lo) / 2.0);
    }
    Ok(out)
}

/// Resultants of a uniform temperature change.
pub fn thermal_resultants(stack: &LaminateStack, delta_t: f64) -> Result<Resultants> {
    stack.validate()?;
    if !delta_t.is_finite() {
        return Err(validation("temperature change must be finite"));
    }
    free_strain_resultants(stack, |_, ply| ply.thermal_expansion() * delta_t)
}

/// Free strain of the PZT ply at an instantaneous voltage, after the
/// envelope has been applied.
pub fn piezo_free_strain(stack: &LaminateStack, voltage: f64, model: &ActuationModel) -> Result<f64> {
    let pzt = stack.plies.get(stack.pzt_index).ok_or_else(|| {
        validation(format!(
            "pzt_index {} out of range for {} plies",
            stack.pzt_index,
            stack.plies.len()
        ))
    })?;
    if !voltage.is_finite() {
        return Err(validation("voltage must be finite"));
    }
    let v = model.limit_voltage(voltage);
    let field = v / pzt.thickness;
    let d31 = pzt.material.d31 * (1.0 + model.beta * field.abs());
    Ok(d31 * field)
}

/// Equivalent thermal resultants of the actuated PZT ply.
pub fn piezo_thermal_load(stack: &LaminateStack, voltage: f64, model: &ActuationModel) -> Result<Resultants> {
    stack.validate()?;
    let strain = piezo_free_strain(stack, voltage, model)?;
    // d32 = d31 for poled PZT, so the free strain is in-plane isotropic.
    let pzt = stack.pzt_index;
    free_strain_resultants(stack, |k, _| {
        if k == pzt {
            Vector3::new(strain, strain, 0.0)
        } else {
            Vector3::zeros()
        }
    })
}

/// Solve `[A B; B D] [eps0; kappa] = [N; M]`.
pub fn solve_state(stack: &LaminateStack, loads: &Resultants, bending: BendingMode) -> Result<PlateState> {
    let abd = abd_matrix(stack)?;
    let h = stack.thickness();

    // Nondimensionalise so the condition number reflects the laminate
    // rather than the mix of Pa*m and Pa*m^3 units.
    let mut k = abd.full();
    let scale = Vector6::new(1.0, 1.0, 1.0, 1.0 / h, 1.0 / h, 1.0 / h);
    for r in 0..6 {
        for c in 0..6 {
            k[(r, c)] *= scale[r] * scale[c];
        }
    }
    let mut rhs = Vector6::zeros();
    rhs.fixed_rows_mut::<3>(0).copy_from(&loads.n);
    rhs.fixed_rows_mut::<3>(3).copy_from(&(loads.m / h));

    let keep: Vec<usize> = match bending {
        BendingMode::Plate => (0..6).collect(),
        BendingMode::Cylindrical => vec![0, 1, 2, 3, 5],
    };
    let n = keep.len();
    let reduced = DMatrix::from_fn(n, n, |r, c| k[(keep[r], keep[c])]);
    let reduced_rhs = DVector::from_fn(n, |r, _| rhs[keep[r]]);

    let sv = reduced.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Numerical {
            what: "singular laminate stiffness system".into(),
            condition,
        });
    }
    let solution = reduced.lu().solve(&reduced_rhs).ok_or(Error::Numerical {
        what: "LU solve of laminate stiffness system failed".into(),
        condition,
    })?;

    let mut x = Vector6::zeros();
    for (r, &idx) in keep.iter().enumerate() {
        x[idx] = solution[r];
    }
    Ok(PlateState {
        eps0: x.fixed_rows::<3>(0).into_owned(),
        kappa: x.fixed_rows::<3>(3).into_owned() / h,
    })
}

/// Residual state after cooling by `delta_t` (negative for cooldown) from
/// the stress-free cure temperature.
pub fn cure_residual_state(stack: &LaminateStack, delta_t: f64) -> Result<PlateState> {
    let loads = thermal_resultants(stack, delta_t)?;
    solve_state(stack, &loads, BendingMode::Plate)
}

/// Combined cure and electrical state.
pub fn plate_state(
    stack: &LaminateStack,
    delta_t: f64,
    voltage: f64,
    model: &ActuationModel,
) -> Result<PlateState> {
    let loads = thermal_resultants(stack, delta_t)? + piezo_thermal_load(stack, voltage, model)?;
    solve_state(stack, &loads, model.bending)
}

/// Peak-to-peak centre deflection of a simply supported strip driven at
/// `vpp`, assuming uniform curvature along the span.
pub fn actuation_deflection(stack: &LaminateStack, vpp: f64, model: &ActuationModel) -> Result<f64> {
    stack.validate()?;
    if !(vpp >= 0.0 && vpp.is_finite()) {
        return Err(validation(format!("vpp must be non-negative, got {vpp}")));
    }
    let peak = 0.5 * vpp;
    let up = solve_state(stack, &piezo_thermal_load(stack, peak, model)?, model.bending)?;
    let down = solve_state(stack, &piezo_thermal_load(stack, -peak, model)?, model.bending)?;
    Ok((up.kappa.x - down.kappa.x).abs() * stack.span * stack.span / 8.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn iso(e: f64, nu: f64, alpha: f64) -> Material {
        Material {
            e1: e,
            e2: e,
            g12: e / (2.0 * (1.0 + nu)),
            nu12: nu,
            alpha1: alpha,
            alpha2: alpha,
            d31: 0.0,
        }
    }

    #[test]
    fn pzt_reduced_stiffness() {
        let ply = Ply::new(Material::PZT3203HD, 1e-4, 0.0).unwrap();
        let q = reduced_stiffness(&ply).unwrap();
        let expected = 62e9 / (1.0 - 0.31 * 0.31);
        assert_relative_eq!(q[(0, 0)], expected, max_relative = 1e-14);
        assert_relative_eq!(q[(1, 1)], expected, max_relative = 1e-14);
        assert_relative_eq!(q[(2, 2)], 23.7e9);
    }

    #[test]
    fn uncoupled_ply_is_diagonal() {
        let mut m = iso(10e9, 0.0, 0.0);
        m.g12 = 3e9;
        let q = reduced_stiffness(&Ply::new(m, 1e-3, 0.0).unwrap()).unwrap();
        assert_eq!(q[(0, 0)], 10e9);
        assert_eq!(q[(0, 1)], 0.0);
        assert_eq!(q[(1, 1)], 10e9);
    }

    #[test]
    fn carbon_reduced_stiffness_hand_values() {
        // Hand evaluation: nu21 = 0.29 * 7.2 / 231.2 = 9.031142e-3,
        // 1 - nu12*nu21 = 0.99738097, Q11 = 231.8071e9, Q22 = 7.218906e9,
        // Q12 = 2.093483e9.
        let q = reduced_stiffness(&Ply::new(Material::CARBON_EPOXY, 1e-4, 0.0).unwrap()).unwrap();
        assert_relative_eq!(q[(0, 0)], 231.8071e9, max_relative = 1e-6);
        assert_relative_eq!(q[(1, 1)], 7.218906e9, max_relative = 1e-6);
        assert_relative_eq!(q[(0, 1)], 2.093483e9, max_relative = 1e-6);
        assert_relative_eq!(q[(2, 2)], 4.3e9);
    }

    #[test]
    fn rejects_bad_moduli() {
        let mut m = Material::CARBON_EPOXY;
        m.e2 = 0.0;
        assert!(matches!(Ply::new(m, 1e-4, 0.0), Err(Error::Validation(_))));
        let mut m = Material::GLASS_EPOXY;
        m.nu12 = 1.2;
        assert!(matches!(Ply::new(m, 1e-4, 0.0), Err(Error::Validation(_))));
        assert!(Ply::new(Material::GLASS_EPOXY, 0.0, 0.0).is_err());
    }

    #[test]
    fn rotation_by_ninety_swaps_axes() {
        let ply = Ply::new(Material::CARBON_EPOXY, 1e-4, std::f64::consts::FRAC_PI_2).unwrap();
        let qbar = transformed_stiffness(&ply).unwrap();
        let q = reduced_stiffness(&ply).unwrap();
        assert_relative_eq!(qbar[(0, 0)], q[(1, 1)], max_relative = 1e-12);
        assert_relative_eq!(qbar[(1, 1)], q[(0, 0)], max_relative = 1e-12);
        assert!(qbar[(0, 2)].abs() < 1e-6 * q[(0, 0)]);
    }

    #[test]
    fn single_ply_has_no_coupling() {
        let stack = LaminateStack::new(
            vec![Ply::new(Material::CARBON_EPOXY, 1e-4, 0.0).unwrap()],
            0.01,
            0.004,
            0,
        )
        .unwrap();
        assert_eq!(abd_matrix(&stack).unwrap().b, Matrix3::zeros());
    }

    #[test]
    fn empty_stack_rejected() {
        let stack = LaminateStack {
            plies: vec![],
            span: 0.01,
            width: 0.004,
            pzt_index: 0,
        };
        assert!(matches!(abd_matrix(&stack), Err(Error::Validation(_))));
    }

    #[test]
    fn two_ply_coupling_matches_interface_sum() {
        let bottom = Ply::new(Material::GLASS_EPOXY, 0.2e-3, 0.0).unwrap();
        let top = Ply::new(Material::CARBON_EPOXY, 0.1e-3, 0.3).unwrap();
        let stack = LaminateStack::new(vec![bottom, top], 0.01, 0.004, 0).unwrap();
        let b = abd_matrix(&stack).unwrap().b;

        let z = [-0.15e-3, 0.05e-3, 0.15e-3];
        let qb = transformed_stiffness(&bottom).unwrap();
        let qt = transformed_stiffness(&top).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let expected = qb[(r, c)] * (z[1] * z[1] - z[0] * z[0]) / 2.0
                    + qt[(r, c)] * (z[2] * z[2] - z[1] * z[1]) / 2.0;
                assert_relative_eq!(b[(r, c)], expected, epsilon = 1e-6, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn pzt_free_strain_at_80_volts() {
        let stack = LaminateStack::lipca_preset();
        let strain = piezo_free_strain(&stack, 80.0, &ActuationModel::linear()).unwrap();
        assert_relative_eq!(strain, -2.56e-4, max_relative = 1e-12);
    }

    #[test]
    fn zero_voltage_gives_zero_load() {
        let stack = LaminateStack::lipca_preset();
        let loads = piezo_thermal_load(&stack, 0.0, &ActuationModel::linear()).unwrap();
        assert_eq!(loads, Resultants::zero());
    }

    #[test]
    fn piezo_load_is_linear() {
        let stack = LaminateStack::lipca_preset();
        let model = ActuationModel::linear();
        let one = piezo_thermal_load(&stack, 30.0, &model).unwrap();
        let two = piezo_thermal_load(&stack, 60.0, &model).unwrap();
        for i in 0..3 {
            assert_relative_eq!(two.n[i], 2.0 * one.n[i], max_relative = 1e-12);
            assert_relative_eq!(two.m[i], 2.0 * one.m[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn bad_pzt_index_rejected() {
        let mut stack = LaminateStack::lipca_preset();
        stack.pzt_index = 9;
        assert!(matches!(
            piezo_thermal_load(&stack, 10.0, &ActuationModel::linear()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn envelope_clamps_overdrive() {
        let stack = LaminateStack::lipca_preset();
        let model = ActuationModel::linear();
        let at_limit = piezo_free_strain(&stack, 80.0, &model).unwrap();
        assert_eq!(piezo_free_strain(&stack, 200.0, &model).unwrap(), at_limit);
        let unbounded = ActuationModel {
            envelope: VoltageEnvelope::Unbounded,
            ..model
        };
        assert_relative_eq!(
            piezo_free_strain(&stack, 160.0, &unbounded).unwrap(),
            2.0 * at_limit,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_cooldown_zero_state() {
        let state = cure_residual_state(&LaminateStack::lipca_preset(), 0.0).unwrap();
        assert_eq!(state, PlateState::zero());
    }

    #[test]
    fn preset_cure_curvature_is_nonzero() {
        let state = cure_residual_state(&LaminateStack::lipca_preset(), DEFAULT_CURE_DELTA_T).unwrap();
        assert!(state.kappa.x.abs() > 0.0);
        assert!(state.kappa.iter().all(|k| k.is_finite()));
    }

    #[test]
    fn symmetric_stack_cures_flat() {
        let g = Ply::new(Material::GLASS_EPOXY, 0.1e-3, 0.0).unwrap();
        let c = Ply::new(Material::CARBON_EPOXY, 0.1e-3, 0.0).unwrap();
        let stack = LaminateStack::new(vec![g, c, g], 0.01, 0.004, 1).unwrap();
        let state = cure_residual_state(&stack, -152.0).unwrap();
        assert!(state.kappa.norm() < 1e-9, "{:?}", state.kappa);
        assert!(state.eps0.x < 0.0);
    }

    #[test]
    fn equal_bimetal_strip_curvature() {
        // Equal layers, equal moduli: 6 dA dT (1+m)^2 / (h (3(1+m)^2 + (1+mn)(m^2 + 1/mn)))
        // with m = n = 1 gives 24/16 * dA dT / h = 1.5 1/m.
        let lower = Ply::new(iso(100e9, 0.0, 0.0), 0.5e-3, 0.0).unwrap();
        let upper = Ply::new(iso(100e9, 0.0, 10e-6), 0.5e-3, 0.0).unwrap();
        let stack = LaminateStack::new(vec![lower, upper], 0.01, 0.004, 0).unwrap();
        let state = cure_residual_state(&stack, 100.0).unwrap();
        assert_relative_eq!(state.kappa.x, 1.5, max_relative = 1e-9);
    }

    #[test]
    fn cylindrical_mode_suppresses_transverse_curvature() {
        let stack = LaminateStack::lipca_preset();
        let model = ActuationModel {
            bending: BendingMode::Cylindrical,
            ..ActuationModel::linear()
        };
        let state = plate_state(&stack, 0.0, 50.0, &model).unwrap();
        assert_eq!(state.kappa.y, 0.0);
        assert!(state.kappa.x != 0.0);
    }

    #[test]
    fn passive_stack_does_not_deflect() {
        let mut stack = LaminateStack::lipca_preset();
        stack.plies[1].material.d31 = 0.0;
        let w = actuation_deflection(&stack, 160.0, &ActuationModel::linear()).unwrap();
        assert_eq!(w, 0.0);
    }

    #[test]
    fn second_active_ply_rejected() {
        let mut stack = LaminateStack::lipca_preset();
        stack.plies[0].material.d31 = -100e-12;
        assert!(stack.validate().is_err());
    }

    #[test]
    fn preset_deflection_is_micrometre_scale() {
        let w =
            actuation_deflection(&LaminateStack::lipca_preset(), 160.0, &ActuationModel::linear()).unwrap();
        assert!(w > 1e-6 && w < 1e-3, "w = {w}");
    }

    #[test]
    fn nonlinear_model_is_superlinear() {
        let stack = LaminateStack::lipca_preset();
        let model = ActuationModel {
            beta: 1e-6,
            ..ActuationModel::linear()
        };
        let w1 = actuation_deflection(&stack, 40.0, &model).unwrap();
        let w2 = actuation_deflection(&stack, 80.0, &model).unwrap();
        let w4 = actuation_deflection(&stack, 160.0, &model).unwrap();
        assert!(w2 > 2.0 * w1);
        assert!(w4 > 2.0 * w2);
    }
}
