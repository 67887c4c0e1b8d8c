//! Driving-policy states and the labelled transition edges between them.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FsmState {
    NormalDrive,
    SteadyDrive,
    CautiousDrive,
    Yielding,
    Emergency,
}

impl FsmState {
    pub const ALL: [FsmState; 5] = [
        FsmState::NormalDrive,
        FsmState::SteadyDrive,
        FsmState::CautiousDrive,
        FsmState::Yielding,
        FsmState::Emergency,
    ];

    pub fn is_drive(self) -> bool {
        matches!(self, Self::NormalDrive | Self::SteadyDrive | Self::CautiousDrive)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::NormalDrive => "NormalDrive",
            Self::SteadyDrive => "SteadyDrive",
            Self::CautiousDrive => "CautiousDrive",
            Self::Yielding => "Yielding",
            Self::Emergency => "Emergency",
        }
    }
}

impl std::fmt::Display for FsmState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Transition events.
///
/// * `E1` risk above `l_steady`: into SteadyDrive.
/// * `E2` risk at or below `l_steady`: out of SteadyDrive.
/// * `E3` risk above `l_cautious`: NormalDrive to CautiousDrive.
/// * `E4` risk at or below `l_cautious`: CautiousDrive to NormalDrive.
/// * `E5` a visible pedestrian has to be yielded to.
/// * `E6` no visible pedestrian has to be yielded to.
/// * `E7` time to collision recovered: Emergency back to Yielding.
/// * `E8` time to collision too short: into Emergency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Event {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
    E8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("illegal transition {from} -> {to}")]
pub struct IllegalTransition {
    pub from: FsmState,
    pub to: FsmState,
}

/// Event labelling the edge `from -> to`; `None` for a self loop.
pub fn edge_event(from: FsmState, to: FsmState) -> Result<Option<Event>, IllegalTransition> {
    use FsmState::*;
    let ev = match (from, to) {
        _ if from == to => return Ok(None),
        (NormalDrive | CautiousDrive, SteadyDrive) => Event::E1,
        (SteadyDrive, NormalDrive | CautiousDrive) => Event::E2,
        (NormalDrive, CautiousDrive) => Event::E3,
        (CautiousDrive, NormalDrive) => Event::E4,
        (s, Yielding) if s.is_drive() => Event::E5,
        (Yielding, s) if s.is_drive() => Event::E6,
        (Emergency, Yielding) => Event::E7,
        (s, Emergency) if s.is_drive() || s == Yielding => Event::E8,
        _ => return Err(IllegalTransition { from, to }),
    };
    Ok(Some(ev))
}
