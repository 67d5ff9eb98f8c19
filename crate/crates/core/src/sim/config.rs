use crate::kv::{self, Applied, ConfigError, KvSection};

use super::op::OpKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitSpec {
    pub count: usize,
    pub latency: u64,
    pub recip_throughput: u64,
}

/// Functional-unit pools. Branches and constants share the ALU pool with
/// adds; loads and prefetches share the load ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnitClass {
    Alu,
    Mul,
    Div,
    Mem,
}

impl UnitClass {
    pub const ALL: [UnitClass; 4] = [UnitClass::Alu, UnitClass::Mul, UnitClass::Div, UnitClass::Mem];

    pub fn of(kind: OpKind) -> UnitClass {
        match kind {
            OpKind::Add | OpKind::Const | OpKind::Branch => UnitClass::Alu,
            OpKind::Mul => UnitClass::Mul,
            OpKind::Div => UnitClass::Div,
            OpKind::Load | OpKind::Prefetch => UnitClass::Mem,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicroarchConfig {
    pub issue_width: usize,
    pub rob_size: usize,
    pub add: UnitSpec,
    pub mul: UnitSpec,
    pub div: UnitSpec,
    pub load_units: usize,
    pub load_recip_throughput: u64,
    pub l1_latency: u64,
    pub llc_latency: u64,
    pub dram_latency: u64,
    /// Cycles from a branch's issue until a misprediction squashes the
    /// transient region.
    pub branch_resolve_delay: u64,
    pub transient_fill_persists: bool,
    /// Max uniform +/- cycles added to every load latency; 0 disables.
    pub load_jitter: u64,
    pub noise_seed: u64,
    /// Period of a full pipeline flush; 0 disables.
    pub flush_interval: u64,
}

impl Default for MicroarchConfig {
    fn default() -> Self {
        MicroarchConfig {
            issue_width: 4,
            rob_size: 224,
            add: UnitSpec { count: 4, latency: 1, recip_throughput: 1 },
            mul: UnitSpec { count: 1, latency: 3, recip_throughput: 1 },
            div: UnitSpec { count: 1, latency: 9, recip_throughput: 4 },
            load_units: 2,
            load_recip_throughput: 1,
            l1_latency: 4,
            llc_latency: 40,
            dram_latency: 200,
            branch_resolve_delay: 1,
            transient_fill_persists: true,
            load_jitter: 0,
            noise_seed: 0,
            flush_interval: 0,
        }
    }
}

impl MicroarchConfig {
    pub fn unit(&self, class: UnitClass) -> UnitSpec {
        match class {
            UnitClass::Alu => self.add,
            UnitClass::Mul => self.mul,
            UnitClass::Div => self.div,
            UnitClass::Mem => UnitSpec {
                count: self.load_units,
                latency: self.l1_latency,
                recip_throughput: self.load_recip_throughput,
            },
        }
    }

    /// Fixed latency of non-memory ops.
    pub fn latency(&self, kind: OpKind) -> u64 {
        match kind {
            OpKind::Add | OpKind::Const | OpKind::Branch => self.add.latency,
            OpKind::Mul => self.mul.latency,
            OpKind::Div => self.div.latency,
            OpKind::Load | OpKind::Prefetch => self.l1_latency,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if self.issue_width == 0 {
            return bad("issue_width must be at least 1");
        }
        if self.rob_size < self.issue_width {
            return bad("rob_size must be at least issue_width");
        }
        for (name, u) in [("add", self.add), ("mul", self.mul), ("div", self.div)] {
            if u.count == 0 || u.latency == 0 || u.recip_throughput == 0 {
                return Err(ConfigError::Invalid(format!(
                    "{name}: units, latency and recip_throughput must be at least 1"
                )));
            }
        }
        if self.load_units == 0 || self.load_recip_throughput == 0 {
            return bad("load_units and load_recip_throughput must be at least 1");
        }
        if !(1 <= self.l1_latency && self.l1_latency < self.llc_latency && self.llc_latency < self.dram_latency) {
            return bad("memory latencies must satisfy 1 <= l1 < llc < dram");
        }
        if self.branch_resolve_delay == 0 {
            return bad("branch_resolve_delay must be at least 1");
        }
        Ok(())
    }

    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = MicroarchConfig::default();
        kv::apply_all(&kv::parse(text)?, &mut [&mut cfg])?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv_string(&self) -> String {
        kv::render(&[self])
    }
}

impl KvSection for MicroarchConfig {
    fn apply(&mut self, key: &str, v: &str) -> Result<Applied, String> {
        match key {
            "issue_width" => self.issue_width = kv::value(key, v)?,
            "rob_size" => self.rob_size = kv::value(key, v)?,
            "add_units" => self.add.count = kv::value(key, v)?,
            "add_latency" => self.add.latency = kv::value(key, v)?,
            "add_recip_throughput" => self.add.recip_throughput = kv::value(key, v)?,
            "mul_units" => self.mul.count = kv::value(key, v)?,
            "mul_latency" => self.mul.latency = kv::value(key, v)?,
            "mul_recip_throughput" => self.mul.recip_throughput = kv::value(key, v)?,
            "div_units" => self.div.count = kv::value(key, v)?,
            "div_latency" => self.div.latency = kv::value(key, v)?,
            "div_recip_throughput" => self.div.recip_throughput = kv::value(key, v)?,
            "load_units" => self.load_units = kv::value(key, v)?,
            "load_recip_throughput" => self.load_recip_throughput = kv::value(key, v)?,
            "l1_latency" => self.l1_latency = kv::value(key, v)?,
            "llc_latency" => self.llc_latency = kv::value(key, v)?,
            "dram_latency" => self.dram_latency = kv::value(key, v)?,
            "branch_resolve_delay" => self.branch_resolve_delay = kv::value(key, v)?,
            "transient_fill_persists" => self.transient_fill_persists = kv::boolean(key, v)?,
            "load_jitter" => self.load_jitter = kv::value(key, v)?,
            "noise_seed" => self.noise_seed = kv::value(key, v)?,
            "flush_interval" => self.flush_interval = kv::value(key, v)?,
            _ => return Ok(Applied::NotMine),
        }
        Ok(Applied::Taken)
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("issue_width", self.issue_width.to_string()),
            ("rob_size", self.rob_size.to_string()),
            ("add_units", self.add.count.to_string()),
            ("add_latency", self.add.latency.to_string()),
            ("add_recip_throughput", self.add.recip_throughput.to_string()),
            ("mul_units", self.mul.count.to_string()),
            ("mul_latency", self.mul.latency.to_string()),
            ("mul_recip_throughput", self.mul.recip_throughput.to_string()),
            ("div_units", self.div.count.to_string()),
            ("div_latency", self.div.latency.to_string()),
            ("div_recip_throughput", self.div.recip_throughput.to_string()),
            ("load_units", self.load_units.to_string()),
            ("load_recip_throughput", self.load_recip_throughput.to_string()),
            ("l1_latency", self.l1_latency.to_string()),
            ("llc_latency", self.llc_latency.to_string()),
            ("dram_latency", self.dram_latency.to_string()),
            ("branch_resolve_delay", self.branch_resolve_delay.to_string()),
            ("transient_fill_persists", self.transient_fill_persists.to_string()),
            ("load_jitter", self.load_jitter.to_string()),
            ("noise_seed", self.noise_seed.to_string()),
            ("flush_interval", self.flush_interval.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let mut c = MicroarchConfig::default();
        c.rob_size = 96;
        c.transient_fill_persists = false;
        let back = MicroarchConfig::from_kv_str(&c.to_kv_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn empty_is_default() {
        assert_eq!(MicroarchConfig::from_kv_str("").unwrap(), MicroarchConfig::default());
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = MicroarchConfig::from_kv_str("rob_size = 8\n\nwidth = 2\n").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey { line: 3, key: "width".into() });
    }

    #[test]
    fn rob_smaller_than_width_rejected() {
        assert!(matches!(
            MicroarchConfig::from_kv_str("rob_size = 0"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn latencies_must_increase() {
        assert!(MicroarchConfig::from_kv_str("llc_latency = 300").is_err());
    }
}
