//! Built-in broadcast channels.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::BroadcastChannelSpec;
use crate::quantum::{ClassicalChannelTable, DensityMatrix, C64};

pub const BUILTIN_NAMES: [&str; 4] = [
    "erasure-broadcast",
    "symmetric-flip-broadcast",
    "pure-state-qubit-broadcast",
    "amplitude-damping-qubit-broadcast",
];

/// `|0⟩` and `cos a |0⟩ + sin a |1⟩`.
pub fn pure_state_pair(angle: f64) -> Result<[DensityMatrix; 2]> {
    let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let tilted = [C64::new(angle.cos(), 0.0), C64::new(angle.sin(), 0.0)];
    Ok([DensityMatrix::pure(&zero)?, DensityMatrix::pure(&tilted)?])
}

/// `|+⟩` and `|−⟩` through amplitude damping with decay `gamma`.
pub fn amplitude_damped_pair(gamma: f64) -> Result<[DensityMatrix; 2]> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidDistribution(format!("damping {gamma} outside [0, 1]")));
    }
    let c = (1.0 - gamma).sqrt();
    let state = |sign: f64| {
        let m = DMatrix::from_row_slice(2, 2, &[1.0 + gamma, sign * c, sign * c, 1.0 - gamma]).map(|v| C64::new(v / 2.0, 0.0));
        DensityMatrix::new(m)
    };
    Ok([state(1.0)?, state(-1.0)?])
}

/// Looks up a built-in channel by name with its two per-receiver parameters.
pub fn builtin_channel(name: &str, params: &[f64]) -> Result<BroadcastChannelSpec> {
    let [a, b] = match params {
        &[a, b] => [a, b],
        _ => {
            return Err(Error::Config(format!(
                "channel {name} takes two parameters, got {}",
                params.len()
            )))
        }
    };
    match name {
        "erasure-broadcast" => {
            BroadcastChannelSpec::classical_product(&ClassicalChannelTable::erasure(a)?, &ClassicalChannelTable::erasure(b)?)
        }
        "symmetric-flip-broadcast" => {
            BroadcastChannelSpec::classical_product(&ClassicalChannelTable::bsc(a)?, &ClassicalChannelTable::bsc(b)?)
        }
        "pure-state-qubit-broadcast" => BroadcastChannelSpec::quantum_product(pure_state_pair(a)?, pure_state_pair(b)?),
        "amplitude-damping-qubit-broadcast" => {
            BroadcastChannelSpec::quantum_product(amplitude_damped_pair(a)?, amplitude_damped_pair(b)?)
        }
        _ => Err(Error::Config(format!(
            "unknown channel {name}; built-in channels are {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{induced_cq_channel, AuxiliaryStructure, Layer, Receiver};
    use crate::synthesis::{channel_i, channel_z};

    #[test]
    fn erasure_extremes() {
        let aux = AuxiliaryStructure::superposition_only(0.5).unwrap();
        let noiseless = builtin_channel("erasure-broadcast", &[0.0, 0.0]).unwrap();
        let useless = builtin_channel("erasure-broadcast", &[1.0, 1.0]).unwrap();
        for r in [Receiver::One, Receiver::Two] {
            let w = induced_cq_channel(&noiseless, &aux, Layer::V, r).unwrap();
            assert!(channel_z(&w).abs() < 1e-12);
            assert!((channel_i(&w) - 1.0).abs() < 1e-12);
            let w = induced_cq_channel(&useless, &aux, Layer::V, r).unwrap();
            assert!((channel_z(&w) - 1.0).abs() < 1e-12);
            assert!(channel_i(&w).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_state_overlap() {
        let a = std::f64::consts::FRAC_PI_4;
        let spec = builtin_channel("pure-state-qubit-broadcast", &[a, a]).unwrap();
        let aux = AuxiliaryStructure::superposition_only(0.5).unwrap();
        for r in [Receiver::One, Receiver::Two] {
            let w = induced_cq_channel(&spec, &aux, Layer::V, r).unwrap();
            assert!((channel_z(&w) - a.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn amplitude_damping_states() {
        let [p, m] = amplitude_damped_pair(0.3).unwrap();
        assert!(!p.operator().is_diagonal());
        assert!((p.operator().trace() - 1.0).abs() < 1e-12);
        // full decay sends both inputs to |0⟩
        let [p1, m1] = amplitude_damped_pair(1.0).unwrap();
        assert_eq!(p1, m1);
        assert_ne!(p, m);
        assert!(amplitude_damped_pair(1.5).is_err());
    }

    #[test]
    fn unknown_names_and_arity() {
        assert!(matches!(builtin_channel("nope", &[0.1, 0.2]), Err(Error::Config(_))));
        assert!(matches!(builtin_channel("erasure-broadcast", &[0.1]), Err(Error::Config(_))));
    }
}
