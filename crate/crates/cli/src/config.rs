use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::failure::Failure;

/// Every recognised key with its default (empty = no default) and a short description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("corpus", "", "plain-text corpus"),
    ("words", "", "comma-separated word-list files"),
    ("treebank", "", "CoNLL-U treebank"),
    ("segmentations", "", "gold segmentation file"),
    ("lm", "", "language-model checkpoint"),
    ("probe", "", "probe checkpoint"),
    ("tagger", "", "POS probe checkpoint"),
    ("bases", "", "nonce-base TSV"),
    ("contexts", "", "nonce-base context TSV (defaults to the bases path with .contexts.tsv)"),
    ("thresholds", "", "filter-threshold JSON from `suffix stats`"),
    ("inventory", "", "suffix inventory TSV (defaults to the built-in 19 suffixes)"),
    ("out", "out", "output directory"),
    ("seed", "1", "master seed"),
    ("train_fraction", "0.9", "LM training share of the corpus stream"),
    ("embed_dim", "64", "character embedding size"),
    ("hidden", "256", "LM hidden units"),
    ("lr", "0.003", "LM learning rate"),
    ("batch", "50", "LM batch lanes"),
    ("dropout", "0.2", "LM dropout"),
    ("bptt", "100", "LM truncation length"),
    ("epochs", "10", "LM epochs"),
    ("patience", "2", "epochs without dev improvement before stopping"),
    ("prefix", "", "sampling prefix"),
    ("length", "500", "characters to sample"),
    ("temperature", "1", "sampling temperature"),
    ("sample_size", "1000", "sampled words for the nonce rate"),
    ("top_k", "5", "triggers kept per unit"),
    ("trigger_window", "13", "characters of context per trigger"),
    ("max_chars", "100000", "corpus characters scanned by unit analyses (0 = all)"),
    ("unit", "", "hidden unit index"),
    ("query", "", "text traced through a unit"),
    ("probe_hidden", "256", "probe decoder hidden units"),
    ("probe_epochs", "5", "probe epochs"),
    ("probe_lr", "0.003", "probe learning rate"),
    ("probe_batch", "32", "probe batch size"),
    ("probe_train_fraction", "0.9", "probe training share (by type or by sentence)"),
    ("max_occurrences", "15", "corpus contexts per segmentation word"),
    ("context_window", "15", "preceding tokens per context"),
    ("prefixes", "", "comma-separated prefix list for NO_PREF (defaults to the built-in list)"),
    ("eval_split", "test", "probe evaluation set: test or all"),
    ("text", "", "sentence for tag evolution"),
    ("reference_size", "500", "real-word occurrences for filter statistics"),
    ("per_category", "50", "nonce bases per category"),
    ("budget", "1000000", "sampled-token budget for nonce generation"),
    ("streams", "4", "independent nonce sampling streams"),
    ("recovery", ",e,s,es,ed", "comma-separated base-recovery endings"),
];

/// Flat `key = value` settings; file values overridden by flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn known(key: &str) -> Option<&'static (&'static str, &'static str, &'static str)> {
    KEYS.iter().find(|(k, _, _)| *k == key)
}

impl Config {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, Failure> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |m: String| Failure::Usage(format!("{}:{}: {m}", origin.display(), i + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| at("expected key = value".into()))?;
            cfg.set(k.trim(), v.trim()).map_err(|e| at(e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Config::parse(&text, path)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        if known(key).is_none() {
            return Err(Failure::Usage(format!("unknown config key {key:?}")));
        }
        if value.contains('\n') || value.trim() != value {
            return Err(Failure::Usage(format!("value for {key} has surrounding whitespace or a newline")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies `key=value` overrides.
    pub fn apply(&mut self, assignments: &[String]) -> Result<(), Failure> {
        for a in assignments {
            let (k, v) =
                a.split_once('=').ok_or_else(|| Failure::Usage(format!("--set expects key=value, got {a:?}")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        match self.values.get(key) {
            Some(v) => Some(v.as_str()),
            None => known(key).map(|(_, d, _)| *d).filter(|d| !d.is_empty()),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, Failure>
    where
        T::Err: fmt::Display,
    {
        let v = self.raw(key).ok_or_else(|| Failure::Usage(format!("missing required setting `{key}`")))?;
        v.parse().map_err(|e| Failure::Usage(format!("bad value {v:?} for {key}: {e}")))
    }

    pub fn opt_path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).filter(|v| !v.is_empty()).map(PathBuf::from)
    }

    /// An input file that must exist.
    pub fn input(&self, key: &str) -> Result<PathBuf, Failure> {
        let p = self.opt_path(key).ok_or_else(|| Failure::Usage(format!("missing required input `{key}`")))?;
        require_file(&p)?;
        Ok(p)
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        match self.raw(key) {
            Some(v) if !v.is_empty() => v.split(',').map(|s| s.trim().to_string()).collect(),
            _ => Vec::new(),
        }
    }

    pub fn remove(&mut self, key: &str) {
        self.values.remove(key);
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Canonical form: explicitly set keys in sorted order.
    pub fn emit(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.emit().as_bytes()))
    }
}

pub fn require_file(p: &Path) -> Result<(), Failure> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("input file {} does not exist", p.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn comments_blank_lines_and_spacing() {
        let c = Config::parse("# run\n\nhidden=128\n  lr =  0.01  \n", Path::new("x")).unwrap();
        assert_eq!(c.get::<usize>("hidden").unwrap(), 128);
        assert_eq!(c.get::<f64>("lr").unwrap(), 0.01);
        assert_eq!(c.get::<usize>("bptt").unwrap(), 100);
        assert_eq!(c.emit(), "hidden = 128\nlr = 0.01\n");
    }

    #[test]
    fn bad_lines_are_usage_errors() {
        for text in ["hidden 128", "colour = red"] {
            assert!(matches!(Config::parse(text, Path::new("x")), Err(Failure::Usage(_))));
        }
        let c = Config::parse("hidden = many", Path::new("x")).unwrap();
        assert!(matches!(c.get::<usize>("hidden"), Err(Failure::Usage(_))));
    }

    #[test]
    fn overrides_win() {
        let mut c = Config::parse("seed = 4", Path::new("x")).unwrap();
        c.apply(&["seed=9".into()]).unwrap();
        assert_eq!(c.get::<u64>("seed").unwrap(), 9);
    }

    fn value() -> impl Strategy<Value = String> {
        "[A-Za-z0-9_./,#=-]([A-Za-z0-9_./,# =-]{0,12}[A-Za-z0-9_./,#=-])?"
    }

    proptest! {
        #[test]
        fn round_trips(entries in prop::collection::vec((0..KEYS.len(), value()), 0..12)) {
            let mut c = Config::default();
            for (k, v) in &entries {
                c.set(KEYS[*k].0, v).unwrap();
            }
            let back = Config::parse(&c.emit(), Path::new("x")).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.emit(), c.emit());
            prop_assert_eq!(back.hash(), c.hash());
        }
    }
}
