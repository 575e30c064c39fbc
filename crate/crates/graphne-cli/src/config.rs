//! Flat `key = value` configuration files for the bench command.

use anyhow::{bail, Context, Result};

/// Parsed config: repeated keys keep every occurrence in file order.
#[derive(Debug, Default, Clone)]
pub struct Config {
    entries: Vec<(String, String)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("config line {}: expected key = value", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                bail!("config line {}: empty key or value", lineno + 1);
            }
            entries.push((key.to_string(), value.to_string()));
        }
        Ok(Config { entries })
    }

    pub fn all(&self, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => match v.parse() {
                Ok(t) => Ok(Some(t)),
                Err(e) => bail!("config key {key}: {e}"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_pairs() {
        let c = Config::parse("# comment\n a = 1 \nb=two\na = 3\n").unwrap();
        assert_eq!(c.all("a"), vec!["1", "3"]);
        assert_eq!(c.get("b"), Some("two"));
        assert_eq!(c.get("a"), Some("3"));
        assert_eq!(c.get_parsed::<usize>("a").unwrap(), Some(3));
        assert!(c.get_parsed::<usize>("b").is_err());
        assert!(Config::parse("just words\n").is_err());
    }
}
