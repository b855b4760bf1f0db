use serde::Deserialize;

use super::{
    check_abstract, Classification, ClassifierConfig, ClassifyError, MethodologyClassifier,
    MethodologyLabel,
};
use crate::llm::{extract_json_object, CompletionTransport, Mode, TransportError};

pub const METHODOLOGY_PROMPT: &str = include_str!("../../assets/prompts/methodology.txt");

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Reply {
    label: String,
}

fn parse_reply(text: &str) -> Result<MethodologyLabel, String> {
    let json = extract_json_object(text).ok_or("no JSON object in reply")?;
    let reply: Reply = serde_json::from_str(json).map_err(|e| e.to_string())?;
    reply.label.parse()
}

/// Classifier backed by a completion endpoint; one retry on malformed
/// output, then the abstract is flagged.
pub struct ModelClassifier {
    transport: Box<dyn CompletionTransport>,
    template: String,
    config: ClassifierConfig,
    version: String,
}

impl ModelClassifier {
    pub fn new(
        transport: Box<dyn CompletionTransport>,
        template: String,
        config: &ClassifierConfig,
    ) -> Result<Self, ClassifyError> {
        if !template.contains("{{abstract}}") {
            return Err(ClassifyError::Config(
                "prompt template lacks `{{abstract}}`".into(),
            ));
        }
        config
            .check_prompt(&template)
            .map_err(ClassifyError::Config)?;
        let version = format!(
            "model-{}",
            &crate::util::sha256_hex(template.as_bytes())[..12]
        );
        Ok(Self {
            transport,
            template,
            config: config.clone(),
            version,
        })
    }
}

impl MethodologyClassifier for ModelClassifier {
    fn classify(&self, abstract_text: &str) -> Result<Classification, ClassifyError> {
        check_abstract(abstract_text)?;
        let prompt = self.template.replace("{{abstract}}", abstract_text.trim());
        self.config
            .check_prompt(&prompt)
            .map_err(ClassifyError::Config)?;
        let mut reason = String::new();
        let mut output = None;
        for _ in 0..2 {
            match self.transport.complete(&prompt, &self.config.params()) {
                Ok(text) => match parse_reply(&text) {
                    Ok(label) => return Ok(Classification::Labeled(label)),
                    Err(e) => {
                        reason = format!("malformed reply: {e}");
                        output = Some(text);
                    }
                },
                Err(e @ TransportError::Unreachable { .. }) => {
                    return Err(ClassifyError::Endpoint(e))
                }
                Err(e) => reason = e.to_string(),
            }
        }
        Ok(Classification::Flagged { reason, output })
    }

    fn mode(&self) -> Mode {
        Mode::Model
    }

    fn version(&self) -> String {
        self.version.clone()
    }

    fn concurrency(&self) -> usize {
        self.config.concurrency
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_parsing() {
        assert_eq!(
            parse_reply(r#"{"label": "mixed_methods"}"#),
            Ok(MethodologyLabel::MixedMethods)
        );
        assert_eq!(
            parse_reply("```json\n{\"label\": \"Theoretical/Other\"}\n```"),
            Ok(MethodologyLabel::TheoreticalOther)
        );
        assert!(parse_reply(r#"{"label": "quantitative", "confidence": 0.9}"#).is_err());
        assert!(parse_reply(r#"{"label": "experimental"}"#).is_err());
        assert!(parse_reply("quantitative").is_err());
    }
}
