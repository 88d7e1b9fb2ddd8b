//! Three-phase drive protocol for the actuator row.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::error::{validation, Error, Result};

pub const N_ACTUATORS: usize = 3;

/// Normalised position at or below which an actuator closes its chamber.
pub const SEAL_THRESHOLD: f64 = -0.5;

/// Slack on the seal comparison so that exact crossings of the threshold
/// are not lost to rounding in `sin`.
pub const SEAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Shape {
    #[default]
    Sine,
    Square,
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sine" | "sin" => Ok(Shape::Sine),
            "square" | "sq" => Ok(Shape::Square),
            other => Err(validation(format!("unknown waveform shape '{other}'"))),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Sine => "sine",
            Shape::Square => "square",
        })
    }
}

/// Default offsets `(0, -2pi/3, -4pi/3)`: the deflection wave travels from
/// actuator 0 (inlet) to actuator 2 (outlet).
pub const DEFAULT_OFFSETS: [f64; N_ACTUATORS] = [0.0, -TAU / 3.0, -2.0 * TAU / 3.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSchedule {
    /// Peak-to-peak drive amplitude (V).
    vpp: f64,
    /// Hz.
    frequency: f64,
    shape: Shape,
    /// Per-actuator phase (rad).
    offsets: [f64; N_ACTUATORS],
}

fn wrap(phase: f64) -> f64 {
    phase.rem_euclid(TAU)
}

impl PhaseSchedule {
    pub fn new(vpp: f64, frequency: f64, shape: Shape, offsets: [f64; N_ACTUATORS]) -> Result<Self> {
        if !(vpp >= 0.0 && vpp.is_finite()) {
            return Err(validation(format!("vpp must be non-negative, got {vpp}")));
        }
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(validation(format!("frequency must be positive, got {frequency}")));
        }
        if offsets.iter().any(|o| !o.is_finite()) {
            return Err(validation("phase offsets must be finite"));
        }
        for i in 0..N_ACTUATORS {
            for j in i + 1..N_ACTUATORS {
                let d = wrap(offsets[i] - offsets[j]);
                if d < 1e-12 || TAU - d < 1e-12 {
                    return Err(Error::Protocol {
                        t: 0.0,
                        detail: format!(
                            "actuators {i} and {j} share a phase offset; the chambers move \
                             together and no valve seal is guaranteed"
                        ),
                    });
                }
            }
        }
        Ok(PhaseSchedule {
            vpp,
            frequency,
            shape,
            offsets,
        })
    }

    /// Balanced 120° schedule.
    pub fn balanced(vpp: f64, frequency: f64, shape: Shape) -> Result<Self> {
        Self::new(vpp, frequency, shape, DEFAULT_OFFSETS)
    }

    pub fn vpp(&self) -> f64 {
        self.vpp
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn offsets(&self) -> [f64; N_ACTUATORS] {
        self.offsets
    }

    pub fn with_vpp(mut self, vpp: f64) -> Result<Self> {
        if !(vpp >= 0.0 && vpp.is_finite()) {
            return Err(validation(format!("vpp must be non-negative, got {vpp}")));
        }
        self.vpp = vpp;
        Ok(self)
    }

    fn check_index(actuator: usize) -> Result<()> {
        if actuator >= N_ACTUATORS {
            return Err(validation(format!(
                "actuator index {actuator} out of range 0..{N_ACTUATORS}"
            )));
        }
        Ok(())
    }

    fn phase(&self, actuator: usize, t: f64) -> f64 {
        TAU * self.frequency * t + self.offsets[actuator]
    }

    /// Position in `[-1, 1]` independent of amplitude.
    pub fn normalized_position(&self, actuator: usize, t: f64) -> Result<f64> {
        Self::check_index(actuator)?;
        let phase = self.phase(actuator, t);
        Ok(match self.shape {
            Shape::Sine => phase.sin(),
            Shape::Square => {
                if wrap(phase) < PI {
                    1.0
                } else {
                    -1.0
                }
            }
        })
    }

    /// Drive voltage of one actuator at time `t`.
    pub fn sample(&self, actuator: usize, t: f64) -> Result<f64> {
        Ok(0.5 * self.vpp * self.normalized_position(actuator, t)?)
    }

    pub fn positions(&self, t: f64) -> [f64; N_ACTUATORS] {
        std::array::from_fn(|k| self.normalized_position(k, t).expect("index in range"))
    }

    /// Schedule that pumps in the opposite direction: the inlet and outlet
    /// actuators exchange offsets.
    pub fn reverse(&self) -> PhaseSchedule {
        let mut out = *self;
        out.offsets.swap(0, N_ACTUATORS - 1);
        out
    }

    pub fn phase_state(&self, t: f64) -> Result<PhaseState> {
        let mut flags = [Position::Up; N_ACTUATORS];
        for (k, flag) in flags.iter_mut().enumerate() {
            if self.sample(k, t)? <= 0.0 {
                *flag = Position::Down;
            }
        }
        Ok(PhaseState(flags))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Up,
    Down,
}

/// Up/down flag of each actuator at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseState(pub [Position; N_ACTUATORS]);

impl PhaseState {
    pub fn down_count(&self) -> usize {
        self.0.iter().filter(|p| **p == Position::Down).count()
    }
}

impl fmt::Display for PhaseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            f.write_str(match p {
                Position::Up => "U",
                Position::Down => "D",
            })?;
        }
        Ok(())
    }
}

/// Whether a chamber is closed at the given normalised position.
pub fn is_sealed(position: f64) -> bool {
    position <= SEAL_THRESHOLD + SEAL_TOLERANCE
}

/// Parse a comma-separated list of three offsets in degrees.
pub fn parse_offsets_deg(text: &str) -> Result<[f64; N_ACTUATORS]> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| validation(format!("invalid phase offset '{}'", s.trim())))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != N_ACTUATORS {
        return Err(validation(format!(
            "expected {N_ACTUATORS} phase offsets, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(validation("phase offsets must be finite"));
    }
    Ok(std::array::from_fn(|k| values[k].to_radians()))
}
