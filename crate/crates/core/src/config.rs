//! The pre-shared configuration `Θ = (sk, f, P_e, R)` plus the block sizing
//! derived from it.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pre-shared secret key, 16 to 64 bytes.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey(Vec<u8>);

impl SecretKey {
    pub const MIN_LEN: usize = 16;
    pub const MAX_LEN: usize = 64;

    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        if !(Self::MIN_LEN..=Self::MAX_LEN).contains(&bytes.len()) {
            return Err(Error::Config(format!(
                "secret key must be {}..={} bytes, got {}",
                Self::MIN_LEN,
                Self::MAX_LEN,
                bytes.len()
            )));
        }
        Ok(SecretKey(bytes))
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s.trim()).map_err(|e| Error::Config(format!("key_hex: {e}")))?;
        Self::new(bytes)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey({} bytes)", self.0.len())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingScheme {
    #[default]
    PrfLowBit,
}

/// The mapping rule `R`: which PRF bit labels a token, optionally complemented.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingRule {
    #[serde(default)]
    pub scheme: MappingScheme,
    #[serde(default)]
    pub complement: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingKind {
    #[default]
    Identity,
}

/// The sampling function `f: [0,1] -> [0,1]` applied to replayed draws.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingFunction {
    #[serde(default)]
    pub kind: SamplingKind,
}

impl SamplingFunction {
    #[inline]
    pub fn apply(&self, r: f64) -> f64 {
        match self.kind {
            SamplingKind::Identity => r,
        }
    }
}

/// How a message is cut into per-bit decisions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FramingMode {
    /// Fixed `block_len` tokens per secret bit.
    #[default]
    Block,
    /// One bit per agent response.
    WholeSequence,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SecurityParams {
    pub k: u32,
    pub margin_floor: f64,
    pub block_len: usize,
    pub mode: FramingMode,
}

impl SecurityParams {
    /// Builds the parameters, deriving `block_len` from [`t_min`] when absent.
    pub fn new(
        k: u32,
        margin_floor: f64,
        block_len: Option<usize>,
        mode: FramingMode,
    ) -> Result<Self> {
        let min = t_min(k, margin_floor)?;
        let block_len = match block_len {
            None => min,
            Some(b) if mode == FramingMode::Block && b < min => {
                return Err(Error::Config(format!(
                    "block_len {b} below the Hoeffding minimum {min} for k={k}, margin={margin_floor}"
                )))
            }
            Some(0) => return Err(Error::Config("block_len must be positive".into())),
            Some(b) => b,
        };
        Ok(SecurityParams {
            k,
            margin_floor,
            block_len,
            mode,
        })
    }

    /// Target decoding error bound `P_e = 2^-k`.
    pub fn p_e(&self) -> f64 {
        (-(self.k as f64)).exp2()
    }

    pub fn t_min(&self) -> usize {
        // Validated at construction.
        t_min(self.k, self.margin_floor).unwrap_or(self.block_len)
    }
}

/// Minimum tokens per bit such that `exp(-2 T δ²) <= 2^-k`, i.e.
/// `ceil(k ln 2 / (2 δ²))`.
///
/// ```
/// assert_eq!(acf_core::t_min(8, 0.25).unwrap(), 45);
/// assert_eq!(acf_core::t_min(16, 0.25).unwrap(), 89);
/// ```
pub fn t_min(k: u32, margin: f64) -> Result<usize> {
    if k == 0 {
        return Err(Error::Calibration(
            "security parameter k must be positive".into(),
        ));
    }
    if !(margin > 0.0 && margin <= 0.25) {
        return Err(Error::Calibration(format!(
            "margin {margin} outside (0, 0.25]"
        )));
    }
    let t = (k as f64 * std::f64::consts::LN_2 / (2.0 * margin * margin)).ceil();
    Ok(t as usize)
}

/// The full shared configuration. Holds no reference to any prefix or model.
#[derive(Clone, Debug)]
pub struct StegoConfig {
    pub sk: SecretKey,
    pub f: SamplingFunction,
    pub sec: SecurityParams,
    pub rule: MappingRule,
    pub session_id: Vec<u8>,
}

impl StegoConfig {
    pub fn new(sk: SecretKey, sec: SecurityParams, session_id: impl Into<Vec<u8>>) -> Self {
        StegoConfig {
            sk,
            f: SamplingFunction::default(),
            sec,
            rule: MappingRule::default(),
            session_id: session_id.into(),
        }
    }

    pub fn with_session(&self, session_id: impl Into<Vec<u8>>) -> Self {
        StegoConfig {
            session_id: session_id.into(),
            ..self.clone()
        }
    }

    pub fn stream(&self) -> crate::prf::RandomStream {
        crate::prf::RandomStream::new(self.sk.clone(), self.session_id.clone())
    }

    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            key_hex: self.sk.to_hex(),
            session_id: String::from_utf8_lossy(&self.session_id).into_owned(),
            k: self.sec.k,
            margin_floor: Some(self.sec.margin_floor),
            block_len: Some(self.sec.block_len),
            mode: self.sec.mode,
            rule: self.rule,
            f: self.f,
        }
    }
}

/// On-disk (TOML) form of [`StegoConfig`]. `margin_floor` may be missing
/// until `calibrate` has been run; `block_len` defaults to `t_min`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub key_hex: String,
    pub session_id: String,
    pub k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_len: Option<usize>,
    #[serde(default)]
    pub mode: FramingMode,
    #[serde(default)]
    pub rule: MappingRule,
    #[serde(default)]
    pub f: SamplingFunction,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }

    pub fn into_config(self) -> Result<StegoConfig> {
        let margin = self.margin_floor.ok_or_else(|| {
            Error::Calibration("margin_floor missing from config; run `acf calibrate` first".into())
        })?;
        let sk = SecretKey::from_hex(&self.key_hex)?;
        let sec = SecurityParams::new(self.k, margin, self.block_len, self.mode)?;
        Ok(StegoConfig {
            sk,
            f: self.f,
            sec,
            rule: self.rule,
            session_id: self.session_id.into_bytes(),
        })
    }
}
