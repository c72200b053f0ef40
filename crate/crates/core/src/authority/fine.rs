//! Fines for detected dishonesty.

/// What triggered a fine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detection {
    /// A rider holding a genuine receipt could not get a Merkle proof.
    RiderWitness,
    /// A randomized roadside audit disagreed with the committed data.
    Rra,
}

/// Utilities of the RRA deterrence calculation. The MP earns `u_d` by
/// cheating undetected and `u_h` by being honest; each cheat is caught with
/// probability `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RraFineParams {
    pub u_d: f64,
    pub u_h: f64,
    pub p: f64,
    /// Added on top of the break-even fine so that the inequality is strict.
    pub margin: f64,
    /// Lowest fine ever levied.
    pub floor: f64,
}

impl Default for RraFineParams {
    fn default() -> Self {
        Self {
            u_d: 100.0,
            u_h: 80.0,
            p: 0.1,
            margin: 1.0,
            floor: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FineSchedule {
    /// Fixed fine per rider-witness failure, paid to the reporting rider.
    pub rider_witness: f64,
    pub rra: RraFineParams,
}

impl Default for FineSchedule {
    fn default() -> Self {
        Self {
            rider_witness: 50.0,
            rra: RraFineParams::default(),
        }
    }
}

/// `max(floor, (u_d - u_h) / p - u_d + margin)`.
///
/// A caught cheater keeps nothing and pays `F`, so cheating is worth
/// `(1 - p) u_d - p F` in expectation, which is below `u_h` exactly when
/// `F > (u_d - u_h) / p - u_d`.
pub fn rra_fine(params: &RraFineParams) -> f64 {
    let break_even = (params.u_d - params.u_h) / params.p - params.u_d;
    (break_even + params.margin).max(params.floor)
}

/// Fine owed for a detection; zero when nothing was detected.
pub fn levy_fine(detection: Option<Detection>, schedule: &FineSchedule) -> f64 {
    match detection {
        None => 0.0,
        Some(Detection::RiderWitness) => schedule.rider_witness,
        Some(Detection::Rra) => rra_fine(&schedule.rra),
    }
}
