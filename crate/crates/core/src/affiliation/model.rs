use super::{
    AffiliationExtractor, ExtractError, Extraction, ExtractionFlag, ExtractorConfig,
    ParsedAffiliation,
};
use crate::llm::{
    extract_json_object, CompletionParams, CompletionTransport, Mode, TransportError,
};

pub const AFFILIATION_PROMPT: &str = include_str!("../../assets/prompts/affiliation.txt");

/// Extractor backed by a completion endpoint.
///
/// A reply that is not a single schema-conforming JSON object is retried
/// once; a second failure flags the record with the raw reply attached.
pub struct ModelExtractor {
    transport: Box<dyn CompletionTransport>,
    template: String,
    config: ExtractorConfig,
}

impl ModelExtractor {
    pub fn new(
        transport: Box<dyn CompletionTransport>,
        template: String,
        config: &ExtractorConfig,
    ) -> Result<Self, ExtractError> {
        if !template.contains("{{input}}") {
            return Err(ExtractError::Config(
                "prompt template lacks `{{input}}`".into(),
            ));
        }
        config
            .check_prompt(&template)
            .map_err(ExtractError::Config)?;
        Ok(Self {
            transport,
            template,
            config: config.clone(),
        })
    }

    fn params(&self) -> CompletionParams {
        self.config.params()
    }
}

/// Parse a completion into the schema. Unknown keys, a missing or empty
/// name, or anything other than one JSON object is an error.
pub(crate) fn parse_reply(text: &str) -> Result<ParsedAffiliation, String> {
    let json = extract_json_object(text).ok_or("no JSON object in reply")?;
    let parsed: ParsedAffiliation = serde_json::from_str(json).map_err(|e| e.to_string())?;
    if parsed.name.trim().is_empty() {
        return Err("empty name".into());
    }
    Ok(parsed)
}

impl AffiliationExtractor for ModelExtractor {
    fn extract(&self, raw: &str) -> Result<Extraction, ExtractError> {
        let raw = raw.trim();
        if raw.is_empty() {
            return Err(ExtractError::EmptyInput);
        }
        let prompt = self.template.replace("{{input}}", raw);
        self.config
            .check_prompt(&prompt)
            .map_err(ExtractError::Config)?;

        let mut last_output = None;
        let mut reason = String::new();
        for _ in 0..2 {
            match self.transport.complete(&prompt, &self.params()) {
                Ok(text) => match parse_reply(&text) {
                    Ok(parsed) => return Ok(Extraction::Parsed(parsed)),
                    Err(e) => {
                        reason = format!("malformed reply: {e}");
                        last_output = Some(text);
                    }
                },
                Err(e @ TransportError::Unreachable { .. }) => {
                    return Err(ExtractError::Endpoint(e))
                }
                Err(e) => reason = e.to_string(),
            }
        }
        Ok(Extraction::Flagged(ExtractionFlag {
            reason,
            output: last_output,
        }))
    }

    fn mode(&self) -> Mode {
        Mode::Model
    }

    fn concurrency(&self) -> usize {
        self.config.concurrency
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Mutex;

    use super::*;

    /// Replays canned replies in order.
    struct Scripted(Mutex<Vec<Result<String, TransportError>>>);

    impl CompletionTransport for Scripted {
        fn complete(&self, _: &str, _: &CompletionParams) -> Result<String, TransportError> {
            self.0.lock().unwrap().remove(0)
        }
    }

    fn extractor(replies: Vec<Result<String, TransportError>>) -> ModelExtractor {
        ModelExtractor::new(
            Box::new(Scripted(Mutex::new(replies))),
            AFFILIATION_PROMPT.to_string(),
            &ExtractorConfig {
                mode: Mode::Model,
                endpoint: Some("http://localhost:1/completion".into()),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn parses_a_clean_reply() {
        let e = extractor(vec![Ok(
            r#"{"name": "M. Smith", "degrees": [], "institution": "U. Michigan"}"#.into(),
        )]);
        let Extraction::Parsed(p) = e.extract("M. Smith, U. Michigan").unwrap() else {
            panic!("flagged")
        };
        assert_eq!(p.institution.as_deref(), Some("U. Michigan"));
    }

    #[test]
    fn retries_once_then_succeeds() {
        let e = extractor(vec![
            Ok("not json".into()),
            Ok(r#"{"name": "M. Smith"}"#.into()),
        ]);
        assert!(matches!(
            e.extract("M. Smith").unwrap(),
            Extraction::Parsed(_)
        ));
    }

    #[test]
    fn second_malformed_reply_flags_with_output() {
        let e = extractor(vec![
            Ok("not json".into()),
            Ok(r#"{"name": "M. Smith", "orcid": "0000"}"#.into()),
            Ok(r#"{"name": "never reached"}"#.into()),
        ]);
        match e.extract("M. Smith").unwrap() {
            Extraction::Flagged(f) => {
                assert!(f.reason.contains("orcid"), "{}", f.reason);
                assert_eq!(
                    f.output.as_deref(),
                    Some(r#"{"name": "M. Smith", "orcid": "0000"}"#)
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unreachable_endpoint_is_fatal() {
        let e = extractor(vec![Err(TransportError::Unreachable {
            endpoint: "x".into(),
            message: "refused".into(),
        })]);
        assert!(matches!(
            e.extract("M. Smith"),
            Err(ExtractError::Endpoint(_))
        ));
    }

    #[test]
    fn prompt_must_fit_context() {
        let config = ExtractorConfig {
            mode: Mode::Model,
            endpoint: Some("http://x".into()),
            max_context: 64,
            ..Default::default()
        };
        let transport = Box::new(Scripted(Mutex::new(vec![])));
        assert!(matches!(
            ModelExtractor::new(transport, AFFILIATION_PROMPT.into(), &config),
            Err(ExtractError::Config(_))
        ));
    }
}
