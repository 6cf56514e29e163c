//! Client-side orchestration: transcribe, then hyphen correction (unless
//! the skip rule applies), then unknown-word correction, each over HTTP.

use std::fmt;
use std::time::Duration;

use reqwest::multipart::{Form, Part};
use reqwest::RequestBuilder;
use thiserror::Error;

use crate::http::ApiResponse;
use crate::pipeline::{skips_hyphen, ChainInput, ChainOutput, Correction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Transcribe,
    Hyphen,
    Unknown,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Transcribe => "transcribe",
            Stage::Hyphen => "hyphen",
            Stage::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("chain failed at stage {stage}: {message}")]
pub struct ChainError {
    pub stage: Stage,
    pub message: String,
    /// HTTP status when the service answered; `None` on transport failure.
    pub http_status: Option<u16>,
}

/// Base URLs (`http://host:port`) of the three services.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoints {
    pub transcribe: String,
    pub hyphen: String,
    pub unknown: String,
}

pub struct ChainClient {
    http: reqwest::Client,
    endpoints: Endpoints,
    skip_threshold: usize,
}

impl ChainClient {
    pub fn new(endpoints: Endpoints, skip_threshold: usize) -> Self {
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .expect("reqwest client without TLS always builds");
        Self {
            http,
            endpoints,
            skip_threshold,
        }
    }

    pub fn endpoints(&self) -> &Endpoints {
        &self.endpoints
    }

    async fn call(&self, stage: Stage, request: RequestBuilder) -> Result<ApiResponse, ChainError> {
        let fail = |message: String, http_status| ChainError {
            stage,
            message,
            http_status,
        };
        let response = request.send().await.map_err(|e| fail(e.to_string(), None))?;
        let code = response.status().as_u16();
        let body = response.bytes().await.map_err(|e| fail(e.to_string(), Some(code)))?;
        let parsed: ApiResponse =
            serde_json::from_slice(&body).map_err(|e| fail(format!("invalid JSON response: {e}"), Some(code)))?;
        if !parsed.is_success() {
            return Err(fail(parsed.message.unwrap_or_else(|| "error without message".into()), Some(code)));
        }
        Ok(parsed)
    }

    pub async fn transcribe(&self, input: &ChainInput) -> Result<String, ChainError> {
        let base = &self.endpoints.transcribe;
        let request = match input {
            ChainInput::Wav(bytes) => {
                let part = Part::bytes(bytes.clone())
                    .file_name("audio.wav")
                    .mime_str("audio/wav")
                    .expect("static mime type parses");
                self.http.post(format!("{base}/transcribe")).multipart(Form::new().part("file", part))
            }
            ChainInput::Lattice(bytes) => self.http.post(format!("{base}/transcribe_lattice")).body(bytes.clone()),
        };
        let r = self.call(Stage::Transcribe, request).await?;
        r.transcription.ok_or_else(|| ChainError {
            stage: Stage::Transcribe,
            message: "response lacks \"transcription\"".into(),
            http_status: None,
        })
    }

    /// POSTs `text` to a `/correct` endpoint.
    pub async fn correct(&self, stage: Stage, text: &str) -> Result<Correction, ChainError> {
        let base = match stage {
            Stage::Hyphen => &self.endpoints.hyphen,
            _ => &self.endpoints.unknown,
        };
        let request = self.http.post(format!("{base}/correct")).form(&[("text", text)]);
        let r = self.call(stage, request).await?;
        let text = r.text.ok_or_else(|| ChainError {
            stage,
            message: "response lacks \"text\"".into(),
            http_status: None,
        })?;
        Ok(Correction {
            text,
            comments: r.comments.unwrap_or_default(),
        })
    }

    /// GET `/health` on every service; the first failure is reported.
    pub async fn health(&self) -> Result<(), ChainError> {
        for (stage, base) in [
            (Stage::Transcribe, &self.endpoints.transcribe),
            (Stage::Hyphen, &self.endpoints.hyphen),
            (Stage::Unknown, &self.endpoints.unknown),
        ] {
            self.call(stage, self.http.get(format!("{base}/health"))).await?;
        }
        Ok(())
    }

    /// Runs the whole chain, stopping at the first failing stage.
    pub async fn run(&self, input: &ChainInput) -> Result<ChainOutput, ChainError> {
        let transcription = self.transcribe(input).await?;
        let hyphen = if skips_hyphen(self.skip_threshold, &transcription) {
            None
        } else {
            Some(self.correct(Stage::Hyphen, &transcription).await?)
        };
        let after_hyphen = hyphen.as_ref().map_or(transcription.as_str(), |c| c.text.as_str());
        let unknown = self.correct(Stage::Unknown, after_hyphen).await?;
        Ok(ChainOutput {
            transcription,
            hyphen,
            unknown,
        })
    }
}
