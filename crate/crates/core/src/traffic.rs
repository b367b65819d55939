//! Message taxonomy (traffic families, PPPP, PDB) and arrival processes.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "critical-V2V")]
    CriticalV2v,
    #[serde(rename = "essential-V2V")]
    EssentialV2v,
    #[serde(rename = "critical-V2I")]
    CriticalV2i,
    #[serde(rename = "essential-V2I")]
    EssentialV2i,
    #[serde(rename = "transactional")]
    Transactional,
    #[serde(rename = "low-priority")]
    LowPriority,
    #[serde(rename = "background")]
    Background,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    V2v,
    V2iI2v,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Service {
    Safety,
    Mobility,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::CriticalV2v,
        Family::EssentialV2v,
        Family::CriticalV2i,
        Family::EssentialV2i,
        Family::Transactional,
        Family::LowPriority,
        Family::Background,
    ];

    /// Minimum (PPPP, PDB in ms) for the family.
    pub fn profile(self) -> (u8, u32) {
        match self {
            Family::CriticalV2v => (2, 20),
            Family::EssentialV2v => (5, 100),
            Family::CriticalV2i => (3, 100),
            Family::EssentialV2i => (5, 100),
            Family::Transactional => (6, 100),
            Family::LowPriority => (6, 100),
            Family::Background => (8, 100),
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Family::CriticalV2v | Family::EssentialV2v => Direction::V2v,
            _ => Direction::V2iI2v,
        }
    }

    pub fn service(self) -> Service {
        match self {
            Family::Transactional | Family::LowPriority | Family::Background => Service::Mobility,
            _ => Service::Safety,
        }
    }

    /// Families sharing a (PPPP, PDB) profile. Several families share one,
    /// so this is a set rather than an inverse.
    pub fn with_profile(pppp: u8, pdb_ms: u32) -> Vec<Family> {
        Self::ALL.into_iter().filter(|f| f.profile() == (pppp, pdb_ms)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Arrival {
    Periodic { period_ms: u64 },
    Event { rate_per_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CastMode {
    #[default]
    Broadcast,
    Unicast,
    Groupcast,
}

impl CastMode {
    pub fn has_feedback(self) -> bool {
        !matches!(self, CastMode::Broadcast)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageClass {
    pub name: String,
    pub family: Family,
    pub pppp: u8,
    pub pdb_ms: u32,
    pub payload_bytes: u32,
    pub arrival: Arrival,
}

pub const DEFAULT_PAYLOAD_BYTES: u32 = 40;
pub const DEFAULT_PERIOD_MS: u64 = 100;

/// Built-in message classes, one or more per traffic family.
pub fn builtin_classes() -> Vec<MessageClass> {
    let periodic = Arrival::Periodic { period_ms: DEFAULT_PERIOD_MS };
    let table: [(&str, Family, Arrival); 12] = [
        ("BSM-critical", Family::CriticalV2v, periodic),
        ("EVA", Family::CriticalV2v, Arrival::Event { rate_per_s: 1.0 }),
        ("BSM-essential", Family::EssentialV2v, periodic),
        ("RSM", Family::CriticalV2i, periodic),
        ("MAP", Family::CriticalV2i, periodic),
        ("SPaT", Family::EssentialV2i, periodic),
        ("RTCM", Family::EssentialV2i, periodic),
        ("SSM", Family::Transactional, periodic),
        ("SRM", Family::Transactional, periodic),
        ("TIM", Family::LowPriority, periodic),
        ("RWM", Family::LowPriority, periodic),
        ("background", Family::Background, Arrival::Event { rate_per_s: 10.0 }),
    ];
    table
        .into_iter()
        .map(|(name, family, arrival)| {
            let (pppp, pdb_ms) = family.profile();
            MessageClass {
                name: name.to_string(),
                family,
                pppp,
                pdb_ms,
                payload_bytes: DEFAULT_PAYLOAD_BYTES,
                arrival,
            }
        })
        .collect()
}

/// Index into a [`ClassTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassId(pub u16);

#[derive(Debug, Clone, PartialEq)]
pub struct ClassTable {
    classes: Vec<MessageClass>,
}

impl ClassTable {
    pub fn builtin() -> Self {
        Self { classes: builtin_classes() }
    }

    /// Built-ins plus `extra`; an extra class with a built-in name replaces it.
    pub fn with_custom(extra: &[MessageClass]) -> Self {
        let mut table = Self::builtin();
        for class in extra {
            match table.classes.iter_mut().find(|c| c.name == class.name) {
                Some(slot) => *slot = class.clone(),
                None => table.classes.push(class.clone()),
            }
        }
        table
    }

    pub fn lookup(&self, name: &str) -> Option<ClassId> {
        self.classes.iter().position(|c| c.name == name).map(|i| ClassId(i as u16))
    }

    pub fn get(&self, id: ClassId) -> &MessageClass {
        &self.classes[id.0 as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &MessageClass)> {
        self.classes.iter().enumerate().map(|(i, c)| (ClassId(i as u16), c))
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MessageId(pub u64);

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub id: MessageId,
    pub class: ClassId,
    pub source: NodeId,
    pub generation_ms: u64,
    pub payload_bytes: u32,
    pub cast: CastMode,
    pub pppp: u8,
}

/// One application stream: a source emitting one message class.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub source: NodeId,
    pub class: ClassId,
    pub arrival: Arrival,
    pub payload_bytes: u32,
    pub cast: CastMode,
    pub pppp: u8,
}

impl Stream {
    pub fn new(source: NodeId, class: ClassId, table: &ClassTable, cast: CastMode) -> Self {
        let c = table.get(class);
        Self {
            source,
            class,
            arrival: c.arrival,
            payload_bytes: c.payload_bytes,
            cast,
            pppp: c.pppp,
        }
    }

    /// Random stream id, stable under adding or removing other streams.
    fn rng_stream(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let (kind, idx) = match self.source {
            NodeId::Rsu(i) => (1u64, i as u64),
            NodeId::Vehicle(i) => (2u64, i as u64),
        };
        for word in [kind, idx, self.class.0 as u64] {
            for b in word.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }

    fn emit(&self, duration_ms: u64, seed: u64, out: &mut Vec<Message>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self.rng_stream());
        let mut push = |t: u64| {
            out.push(Message {
                id: MessageId(0),
                class: self.class,
                source: self.source,
                generation_ms: t,
                payload_bytes: self.payload_bytes,
                cast: self.cast,
                pppp: self.pppp,
            })
        };
        match self.arrival {
            Arrival::Periodic { period_ms } => {
                let phase = rng.random_range(0..period_ms);
                let mut t = phase;
                while t < duration_ms {
                    push(t);
                    t += period_ms;
                }
            }
            Arrival::Event { rate_per_s } => {
                if rate_per_s <= 0.0 {
                    return;
                }
                let gap = Exp::new(rate_per_s / 1000.0).expect("positive rate");
                let mut t = gap.sample(&mut rng);
                while t < duration_ms as f64 {
                    push(t.floor() as u64);
                    t += gap.sample(&mut rng);
                }
            }
        }
    }
}

/// Expands streams into a time-ordered message list over `[0, duration_ms)`.
///
/// Periodic streams start at a uniform random phase in `[0, period)`; event
/// streams are Poisson. Ties are ordered by source, then class, and message
/// ids follow that order.
pub fn generate(streams: &[Stream], duration_ms: u64, seed: u64) -> Vec<Message> {
    let mut out = Vec::new();
    for s in streams {
        s.emit(duration_ms, seed, &mut out);
    }
    out.sort_by_key(|m| (m.generation_ms, m.source, m.class));
    for (i, m) in out.iter_mut().enumerate() {
        m.id = MessageId(i as u64);
    }
    out
}
