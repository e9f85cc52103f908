use serde::Serialize;
use serde_json::Value;

use crate::commands::Output;
use crate::{Format, RunConfig};

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<&'a Value>,
    result: &'a Value,
    exit_code: u8,
}

pub fn emit(cfg: &RunConfig, out: &Output) -> String {
    match cfg.format {
        Format::Json => {
            let env = Envelope {
                tool: "ordbound",
                version: ordbound::VERSION,
                config: cfg,
                input: out.input.as_ref(),
                result: &out.result,
                exit_code: out.code,
            };
            let mut s = serde_json::to_string_pretty(&env).expect("serializable");
            s.push('\n');
            s
        }
        Format::Csv => out.csv.clone(),
        Format::Text => {
            let mut s = format!("ordbound {} {}", ordbound::VERSION, cfg.command);
            if let Some(i) = &cfg.input {
                s.push_str(&format!(" {i}"));
            }
            s.push_str(&format!(" (tol {:e}, eps {:?})\n", cfg.tol, cfg.eps));
            s.push_str(&out.text);
            s
        }
    }
}
