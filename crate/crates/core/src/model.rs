//! Model tags and dispatch from a tag plus a [`RaidConfig`] to a generator.

use std::fmt;
use std::str::FromStr;

use crate::config::RaidConfig;
use crate::error::{Error, Result};
use crate::generator::{
    build_imperfect_repair, build_individual_repair, build_no_repair, build_simultaneous_repair,
    Generator,
};
use crate::sector::{build_sector_generator, build_sector_imperfect_generator};

/// The reliability models the engine knows about.
///
/// The first six are continuous-time Markov chains with an absorbing FAIL
/// state. The two delay variants model a fixed rebuild time `h` and are not
/// Markov chains; they are handled by the delay integrators and the
/// simulator, not by [`build_generator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    NoRepair,
    IndividualRepair,
    SimultaneousRepair,
    ImperfectRepair,
    Sector,
    SectorImperfect,
    DelayNaive,
    DelayRebuild,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::NoRepair,
        ModelKind::IndividualRepair,
        ModelKind::SimultaneousRepair,
        ModelKind::ImperfectRepair,
        ModelKind::Sector,
        ModelKind::SectorImperfect,
        ModelKind::DelayNaive,
        ModelKind::DelayRebuild,
    ];

    /// The six chain models, in presentation order.
    pub const CHAINS: [ModelKind; 6] = [
        ModelKind::NoRepair,
        ModelKind::IndividualRepair,
        ModelKind::SimultaneousRepair,
        ModelKind::ImperfectRepair,
        ModelKind::Sector,
        ModelKind::SectorImperfect,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::NoRepair => "no-repair",
            ModelKind::IndividualRepair => "individual",
            ModelKind::SimultaneousRepair => "simultaneous",
            ModelKind::ImperfectRepair => "imperfect",
            ModelKind::Sector => "sector",
            ModelKind::SectorImperfect => "sector-imperfect",
            ModelKind::DelayNaive => "delay-naive",
            ModelKind::DelayRebuild => "delay-rebuild",
        }
    }

    pub fn is_chain(self) -> bool {
        !matches!(self, ModelKind::DelayNaive | ModelKind::DelayRebuild)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

/// Builds the generator for one of the six chain models.
pub fn build_generator(kind: ModelKind, cfg: &RaidConfig) -> Result<Generator> {
    match kind {
        ModelKind::NoRepair => build_no_repair(cfg),
        ModelKind::IndividualRepair => build_individual_repair(cfg),
        ModelKind::SimultaneousRepair => build_simultaneous_repair(cfg),
        ModelKind::ImperfectRepair => build_imperfect_repair(cfg),
        ModelKind::Sector => build_sector_generator(cfg),
        ModelKind::SectorImperfect => build_sector_imperfect_generator(cfg),
        ModelKind::DelayNaive | ModelKind::DelayRebuild => {
            Err(Error::UnsupportedModel(kind.tag().to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.tag().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("raid9000".parse::<ModelKind>().is_err());
    }

    #[test]
    fn chain_models_build() {
        let cfg = RaidConfig::new(4, 2).with_p(0.05);
        for kind in ModelKind::CHAINS {
            let gen = build_generator(kind, &cfg).unwrap();
            assert!(gen.dim() >= 3);
        }
    }

    #[test]
    fn delay_models_have_no_generator() {
        let cfg = RaidConfig::new(4, 1);
        assert!(build_generator(ModelKind::DelayRebuild, &cfg).is_err());
        assert!(build_generator(ModelKind::DelayNaive, &cfg).is_err());
    }
}
