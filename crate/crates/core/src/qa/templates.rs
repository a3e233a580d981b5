//! Versioned question-template table.
//!
//! Templates are a checked-in asset keyed by task type and version,
//! with `{slot}` placeholders. Rendering is deterministic and fails on
//! unknown templates or unfilled slots.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::Deserialize;

use super::QaError;

#[derive(Debug, Deserialize)]
pub struct TemplateTable {
    pub version: u32,
    templates: BTreeMap<String, String>,
}

static BUILTIN: LazyLock<TemplateTable> = LazyLock::new(|| {
    serde_json::from_str(include_str!("../../assets/templates.json"))
        .expect("bundled template table is valid")
});

impl TemplateTable {
    pub fn builtin() -> &'static TemplateTable {
        &BUILTIN
    }

    pub fn contains(&self, template_id: &str) -> bool {
        self.templates.contains_key(template_id)
    }

    /// Substitutes every `{slot}` placeholder; no markers remain in the
    /// output.
    pub fn render(
        &self,
        template_id: &str,
        slots: &BTreeMap<String, String>,
    ) -> Result<String, QaError> {
        let template = self
            .templates
            .get(template_id)
            .ok_or_else(|| QaError::UnknownTemplate(template_id.to_string()))?;
        let mut out = String::with_capacity(template.len());
        let mut rest = template.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let close = after
                .find('}')
                .ok_or_else(|| QaError::MissingSlot("<unterminated placeholder>".to_string()))?;
            let key = &after[..close];
            match slots.get(key) {
                Some(value) => out.push_str(value),
                None => return Err(QaError::MissingSlot(key.to_string())),
            }
            rest = &after[close + 1..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

/// Renders against the built-in table.
pub fn render_question(
    template_id: &str,
    slots: &BTreeMap<String, String>,
) -> Result<String, QaError> {
    TemplateTable::builtin().render(template_id, slots)
}
