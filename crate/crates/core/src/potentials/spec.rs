//! Potential files: TOML or JSON, selected by extension (`.json` is JSON,
//! anything else is TOML).

use std::path::Path;

use super::PotentialSpec;
use crate::error::{Error, Result};

pub fn parse_spec(text: &str, json: bool) -> std::result::Result<PotentialSpec, String> {
    let spec: PotentialSpec = if json {
        serde_json::from_str(text).map_err(|e| e.to_string())?
    } else {
        toml::from_str(text).map_err(|e| e.to_string())?
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

pub fn load_spec(path: &Path) -> Result<PotentialSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let json = path.extension().is_some_and(|e| e == "json");
    parse_spec(&text, json).map_err(|msg| Error::Parse {
        path: path.display().to_string(),
        msg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_step() {
        let text = r#"
kind = "step"
levels = [
  { start = 0.0, end = 0.5, value = 0.0 },
  { start = 0.5, end = 1.0, value = 20.0 },
]
"#;
        let spec = parse_spec(text, false).unwrap();
        assert_eq!(spec.dim(), 1);
    }

    #[test]
    fn json_nested_dislocation() {
        let text = r#"{"kind":"dislocation","t":0.3,
            "base":{"kind":"trig","dim":2,"terms":[{"kx":1,"cos":-20},{"kx":0,"ky":1,"cos":-20}]}}"#;
        let spec = parse_spec(text, true).unwrap();
        assert_eq!(spec.dim(), 2);
        let back = serde_json::to_string(&spec).unwrap();
        assert_eq!(parse_spec(&back, true).unwrap(), spec);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse_spec(r#"{"kind":"muffin","r":0.7}"#, true).is_err());
        assert!(parse_spec(r#"{"kind":"bogus"}"#, true).is_err());
    }
}
