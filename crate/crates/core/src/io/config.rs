use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ConfigIssue, Error, Result};
use crate::fec::FecLedger;
use crate::fiber::FiberSpec;
use crate::harness::{
    AnalogResponse, ChannelSettings, Dr8Settings, LinkConfig, LinkParams, ResponseKind,
    ResponsePosition, RxSettings, SweepSpec, SweepVariable, TxSettings, WdmSettings,
};
use crate::io::table::read_response_table;
use crate::laser::LaserSpec;
use crate::rx::EqualizerConfig;

/// Version tag every configuration document must carry.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    /// Overrides `rx.equalizers` for the sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equalizers: Option<Vec<EqualizerConfig>>,
}

/// On-disk configuration: a link description plus optional sweep, WDM and
/// DR8 sections. Every omitted key takes its default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConfigDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub link: LinkParams,
    pub fiber: FiberSpec,
    pub laser: LaserSpec,
    pub tx: TxSettings,
    pub channel: ChannelSettings,
    pub rx: RxSettings,
    pub fec: FecLedger,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wdm: Option<WdmSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dr8: Option<Dr8Settings>,
}

impl Default for ConfigDocument {
    fn default() -> Self {
        ConfigDocument::from_link(LinkConfig::default())
    }
}

impl ConfigDocument {
    pub fn from_link(c: LinkConfig) -> Self {
        ConfigDocument {
            schema_version: Some(SCHEMA_VERSION),
            link: c.link,
            fiber: c.fiber,
            laser: c.laser,
            tx: c.tx,
            channel: c.channel,
            rx: c.rx,
            fec: c.fec,
            sweep: None,
            wdm: None,
            dr8: None,
        }
    }

    pub fn link_config(&self) -> LinkConfig {
        LinkConfig {
            link: self.link.clone(),
            fiber: self.fiber,
            laser: self.laser.clone(),
            tx: self.tx.clone(),
            channel: self.channel.clone(),
            rx: self.rx.clone(),
            fec: self.fec.clone(),
        }
    }

    /// The sweep described by the `[sweep]` section, if any.
    pub fn sweep_spec(&self) -> Option<SweepSpec> {
        let s = self.sweep.as_ref()?;
        let mut spec = SweepSpec::new(self.link_config(), s.variable, s.values.clone());
        if let Some(eq) = &s.equalizers {
            spec.equalizers = eq.clone();
        }
        spec.wdm = self.wdm.clone();
        spec.dr8 = self.dr8.clone();
        Some(spec)
    }

    /// Every semantic problem in the document.
    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        match self.schema_version {
            None => out.push(issue(
                "schema_version",
                format!("missing; expected {SCHEMA_VERSION}"),
            )),
            Some(v) if v != SCHEMA_VERSION => out.push(issue(
                "schema_version",
                format!("unsupported version {v}; expected {SCHEMA_VERSION}"),
            )),
            _ => {}
        }
        let link = self.link_config();
        out.extend(link.issues());
        if self.fec.codes().is_empty() {
            out.push(issue("fec", "ledger must contain at least one code"));
        }
        if let Some(wdm) = &self.wdm {
            if let Err(e) = wdm.plan() {
                out.push(issue("wdm", e.to_string()));
            }
        }
        if let Some(dr8) = &self.dr8 {
            if !dr8.laser_power_dbm.is_finite() {
                out.push(issue("dr8.laser_power_dbm", "must be finite"));
            }
            if !(dr8.splitter_excess_loss_db >= 0.0) {
                out.push(issue("dr8.splitter_excess_loss_db", "must be >= 0"));
            }
            if !(dr8.v_pi_v > 0.0) {
                out.push(issue("dr8.v_pi_v", "must be > 0"));
            }
        }
        // Sweep checks build on a valid base; base problems are already listed.
        if let (Some(spec), true) = (self.sweep_spec(), out.is_empty()) {
            if let Err(e) = spec.validate() {
                let path = match &e {
                    Error::InvalidParameter { name, .. } => format!("sweep.{name}"),
                    _ => "sweep".to_string(),
                };
                let message = match e {
                    Error::InvalidParameter { reason, .. } => reason,
                    other => other.to_string(),
                };
                out.push(ConfigIssue { path, message });
            }
        }
        out
    }
}

fn issue(path: &str, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue {
        path: path.into(),
        message: message.into(),
    }
}

/// Dotted path with array indices as `[i]`; `Option` layers are transparent.
fn dotted(path: &serde_ignored::Path<'_>) -> String {
    use serde_ignored::Path as P;
    match path {
        P::Root => String::new(),
        P::Seq { parent, index } => format!("{}[{index}]", dotted(parent)),
        P::Map { parent, key } => {
            let p = dotted(parent);
            if p.is_empty() {
                key.clone()
            } else {
                format!("{p}.{key}")
            }
        }
        P::Some { parent } | P::NewtypeStruct { parent } | P::NewtypeVariant { parent } => {
            dotted(parent)
        }
    }
}

fn strip_indices(path: &str) -> String {
    let mut out = String::with_capacity(path.len());
    let mut depth = 0;
    for ch in path.chars() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            _ if depth == 0 => out.push(ch),
            _ => {}
        }
    }
    out
}

/// Every key the schema knows, as index-free dotted paths.
fn known_keys() -> BTreeSet<String> {
    let mut doc = ConfigDocument::default();
    doc.channel.rop_dbm = Some(0.0);
    doc.channel.pd.bandwidth_ghz = Some(1.0);
    doc.channel.responses = vec![AnalogResponse {
        name: String::new(),
        position: ResponsePosition::Tx,
        kind: ResponseKind::Table,
        order: Some(1),
        cutoff_ghz: Some(1.0),
        path: Some(PathBuf::new()),
    }];
    doc.rx.scope_rate_gsa = Some(1.0);
    doc.sweep = Some(SweepSection {
        variable: SweepVariable::Rop,
        values: vec![0.0],
        equalizers: Some(doc.rx.equalizers.clone()),
    });
    doc.wdm = Some(WdmSettings::default());
    doc.dr8 = Some(Dr8Settings::default());
    let value = toml::Value::try_from(&doc).expect("schema sample serializes");
    let mut keys = BTreeSet::new();
    collect_keys(&value, "", &mut keys);
    keys
}

fn collect_keys(v: &toml::Value, prefix: &str, keys: &mut BTreeSet<String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, child) in t {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                keys.insert(path.clone());
                collect_keys(child, &path, keys);
            }
        }
        toml::Value::Array(items) => {
            for item in items {
                collect_keys(item, prefix, keys);
            }
        }
        _ => {}
    }
}

const UNIT_SUFFIXES: &[&str] = &[
    "gbd", "gsa", "ghz", "nm", "km", "dbm", "db", "c", "vpp", "v", "mw", "a", "w", "ps", "nm2",
    "per",
];

/// Key with underscores and trailing unit tags removed: `symbol_rate_gbd`
/// and `symbolrate` both become `symbolrate`.
fn stem(key: &str) -> String {
    let mut parts: Vec<&str> = key.split('_').collect();
    while parts.len() > 1 && UNIT_SUFFIXES.contains(parts.last().unwrap()) {
        parts.pop();
    }
    parts.concat()
}

fn key_distance(a: &str, b: &str) -> usize {
    let a = a.to_ascii_lowercase();
    let b = b.to_ascii_lowercase();
    strsim::levenshtein(&a, &b)
        .min(strsim::levenshtein(
            &a.replace('_', ""),
            &b.replace('_', ""),
        ))
        .min(strsim::levenshtein(&stem(&a), &stem(&b)))
}

/// Nearest known key to the unknown `path`: siblings first, then anywhere
/// in the schema.
fn suggest(path: &str, known: &BTreeSet<String>) -> Option<String> {
    let plain = strip_indices(path);
    let (section, key) = match plain.rsplit_once('.') {
        Some((s, k)) => (s.to_string(), k.to_string()),
        None => (String::new(), plain.clone()),
    };
    let limit = (key.len() / 3).max(2);
    let best = |cands: Vec<&String>| {
        cands
            .into_iter()
            .map(|c| {
                let leaf = c.rsplit('.').next().unwrap_or(c);
                (key_distance(&key, leaf), c)
            })
            .filter(|(d, _)| *d <= limit)
            .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)))
            .map(|(_, c)| c.clone())
    };
    let siblings: Vec<&String> = known
        .iter()
        .filter(|k| match k.rsplit_once('.') {
            Some((s, _)) => s == section,
            None => section.is_empty(),
        })
        .collect();
    best(siblings).or_else(|| best(known.iter().collect()))
}

/// Parses and fully validates a configuration document.
///
/// Unknown keys are fatal and each comes with the nearest known key when
/// one is close. All problems are reported together.
pub fn parse_config(text: &str) -> Result<ConfigDocument> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| Error::Config(vec![issue("", e.to_string())]))?;
    let mut unknown = Vec::new();
    let parsed: std::result::Result<ConfigDocument, _> =
        serde_ignored::deserialize(de, |p| unknown.push(dotted(&p)));
    let doc =
        parsed.map_err(|e| Error::Config(vec![issue("", e.to_string().trim_end().to_string())]))?;
    let mut issues = Vec::new();
    if !unknown.is_empty() {
        let known = known_keys();
        for path in unknown {
            let message = match suggest(&path, &known) {
                Some(s) => format!("unknown key; did you mean `{s}`?"),
                None => "unknown key".to_string(),
            };
            issues.push(ConfigIssue { path, message });
        }
    }
    issues.extend(doc.issues());
    if issues.is_empty() {
        Ok(doc)
    } else {
        Err(Error::Config(issues))
    }
}

/// Reads, parses and validates a configuration file. Relative response
/// table paths are resolved against the file's directory and each table is
/// checked.
pub fn load_config(path: &Path) -> Result<ConfigDocument> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut doc = parse_config(&text)?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let mut issues = Vec::new();
    for (i, r) in doc.channel.responses.iter_mut().enumerate() {
        let Some(p) = r.path.as_mut() else { continue };
        if p.is_relative() {
            *p = dir.join(&*p);
        }
        if let Err(e) = read_response_table(p) {
            issues.push(ConfigIssue {
                path: format!("channel.responses[{i}].path"),
                message: e.to_string(),
            });
        }
    }
    if issues.is_empty() {
        Ok(doc)
    } else {
        Err(Error::Config(issues))
    }
}

/// The document with every default filled in, as TOML. Parsing the output
/// yields the same document.
pub fn effective_toml(doc: &ConfigDocument) -> Result<String> {
    toml::to_string(doc).map_err(|e| Error::Serialize(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "schema_version = 1\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let doc = parse_config(MINIMAL).unwrap();
        assert_eq!(doc.link_config(), LinkConfig::default());
        assert!(doc.sweep.is_none());
    }

    #[test]
    fn effective_config_round_trips() {
        let text = r#"
schema_version = 1
[link]
modulation = "pam8"
symbol_rate_gbd = 200.0
[channel]
rop_dbm = 3.5
[[rx.equalizers]]
kind = "dfe"
ff_taps = 31
[sweep]
variable = "rop"
values = [1.0, 2.0]
"#;
        let doc = parse_config(text).unwrap();
        let echo = effective_toml(&doc).unwrap();
        let again = parse_config(&echo).unwrap();
        assert_eq!(doc, again);
        assert_eq!(echo, effective_toml(&again).unwrap());
        assert_eq!(doc.rx.equalizers[0].fb_taps, 21);
    }

    #[test]
    fn rate_violation_names_both_keys() {
        let err =
            parse_config("schema_version = 1\n[link]\nsymbol_rate_gbd = 250.0\n").unwrap_err();
        let text = err.to_string();
        assert!(
            text.contains("link.symbol_rate_gbd") && text.contains("link.dac_rate_gsa"),
            "{text}"
        );
    }

    #[test]
    fn unknown_key_gets_suggestion() {
        let err = parse_config("schema_version = 1\n[link]\nsymbolrate = 200.0\n").unwrap_err();
        let Error::Config(issues) = err else { panic!() };
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].path, "link.symbolrate");
        assert!(
            issues[0].message.contains("`link.symbol_rate_gbd`"),
            "{}",
            issues[0].message
        );
    }

    #[test]
    fn unknown_keys_are_all_reported() {
        let text = "schema_version = 1\nbogus = 1\n[fiber]\nlenght_km = 2.0\n[[rx.equalizers]]\nkind = \"ffe\"\nff_tap = 3\n";
        let Error::Config(issues) = parse_config(text).unwrap_err() else {
            panic!()
        };
        let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
        assert_eq!(
            paths,
            ["bogus", "fiber.lenght_km", "rx.equalizers[0].ff_tap"]
        );
        assert!(issues[1].message.contains("fiber.length_km"));
        assert!(issues[2].message.contains("rx.equalizers.ff_taps"));
    }

    #[test]
    fn schema_version_required() {
        let Error::Config(issues) = parse_config("").unwrap_err() else {
            panic!()
        };
        assert_eq!(issues[0].path, "schema_version");
        assert!(parse_config("schema_version = 2").is_err());
    }

    #[test]
    fn sweep_problems_reported() {
        let text = "schema_version = 1\n[sweep]\nvariable = \"rop\"\nvalues = [2.0, 1.0]\n";
        let Error::Config(issues) = parse_config(text).unwrap_err() else {
            panic!()
        };
        assert_eq!(issues[0].path, "sweep.values");
    }

    #[test]
    fn syntax_error_is_reported() {
        assert!(matches!(
            parse_config("schema_version = = 1"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            parse_config("schema_version = 1\n[link]\nnum_symbols = \"x\""),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn stems_drop_units() {
        assert_eq!(stem("symbol_rate_gbd"), "symbolrate");
        assert_eq!(stem("loss_db_per_km"), "loss");
        assert_eq!(stem("c"), "c");
    }
}
