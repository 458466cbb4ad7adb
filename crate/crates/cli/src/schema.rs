//! Published input schemas (JSON Schema, draft 2020-12).

use serde_json::{json, Value};

use crate::commands::Command;

pub const VERSION: u32 = 1;

fn complex() -> Value {
    json!({ "type": "array", "items": { "type": "number" }, "minItems": 2, "maxItems": 2,
            "description": "complex number [re, im]" })
}

fn theta() -> Value {
    json!({
        "type": "object",
        "required": ["theta0", "thetax", "theta1", "thetainf"],
        "properties": {
            "theta0": complex(), "thetax": complex(), "theta1": complex(), "thetainf": complex()
        },
        "additionalProperties": false
    })
}

fn traces() -> Value {
    let names = ["p0", "px", "p1", "pinf", "p0x", "p01", "px1"];
    let props: serde_json::Map<String, Value> = names.iter().map(|n| (n.to_string(), complex())).collect();
    json!({ "type": "object", "required": names, "properties": props, "additionalProperties": false })
}

fn point() -> Value {
    json!({ "enum": ["zero", "one", "infinity"] })
}

fn expand_input() -> Value {
    json!({
        "type": "object",
        "required": ["theta", "point"],
        "properties": {
            "theta": theta(),
            "point": point(),
            "order": { "type": "integer", "minimum": 1, "maximum": 12, "default": 8 },
            "traces": traces(),
            "sigma": complex(),
            "r": complex()
        },
        "oneOf": [ { "required": ["traces"] }, { "required": ["sigma", "r"] } ],
        "additionalProperties": false
    })
}

pub fn input_schema(command: Command) -> Value {
    let body = match command {
        Command::Connect => json!({
            "type": "object",
            "required": ["theta", "traces"],
            "properties": { "theta": theta(), "traces": traces() },
            "additionalProperties": false
        }),
        Command::Expand => expand_input(),
        Command::Eval => json!({
            "type": "object",
            "required": ["x"],
            "properties": {
                "expansion": { "type": "object", "description": "output of `expand`" },
                "spec": expand_input(),
                "x": { "type": "array", "items": complex() },
                "config": {
                    "type": "object",
                    "properties": {
                        "radius": { "type": "number", "default": 0.05 },
                        "oscillatory_bound": { "type": ["number", "null"], "default": 0.5 }
                    }
                }
            },
            "oneOf": [ { "required": ["expansion"] }, { "required": ["spec"] } ],
            "additionalProperties": false
        }),
        Command::Braid => json!({
            "type": "object",
            "required": ["traces", "generator"],
            "properties": {
                "traces": traces(),
                "generator": { "enum": ["g0", "g1", "g0_inv", "g1_inv", "sigma01", "sigmax1", "sigmax1_inv", "fractional_linear"] }
            },
            "additionalProperties": false
        }),
        Command::Picard => json!({
            "type": "object",
            "required": ["nu1", "nu2", "x"],
            "properties": {
                "nu1": complex(), "nu2": complex(),
                "N": { "type": "integer", "default": 0 },
                "x": { "type": "array", "items": complex() },
                "calV": { "type": "number", "minimum": -2, "maximum": 2 }
            },
            "additionalProperties": false
        }),
        Command::Verify => json!({
            "type": "object",
            "description": "single run: theta + traces; with --batch k: optional config and tolerance only",
            "properties": {
                "theta": theta(),
                "traces": traces(),
                "tolerance": { "type": "number", "default": 0.01 },
                "config": {
                    "type": "object",
                    "properties": {
                        "x_start": { "type": "number", "default": 1e-3 },
                        "order": { "type": "integer", "default": 8 },
                        "tolerance": { "type": "number", "default": 1e-11 },
                        "max_step": { "type": "number", "default": 0.02 },
                        "ray_angle": { "type": "number", "default": 0.0 },
                        "seed_tolerance": { "type": "number", "default": 1e-8 },
                        "fit_tolerance": { "type": "number", "default": 1e-4 },
                        "holdout_tolerance": { "type": "number", "default": 1e-4 },
                        "detour": {
                            "type": "object",
                            "properties": {
                                "radius_factor": { "type": "number", "default": 10.0 },
                                "max_detours": { "type": "integer", "default": 20 },
                                "arc_chords": { "type": "integer", "default": 12 }
                            }
                        }
                    }
                }
            },
            "additionalProperties": false
        }),
    };
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": format!("pvi {} input", serde_json::to_value(command).expect("enum serializes").as_str().unwrap_or("?")),
        "version": VERSION,
        "schema": body
    })
}

pub fn job_schema() -> Value {
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "pvi job",
        "version": VERSION,
        "schema": {
            "type": "object",
            "required": ["command"],
            "properties": {
                "command": { "enum": ["connect", "expand", "eval", "braid", "picard", "verify"] },
                "payload": { "type": "object" },
                "seed": { "type": "integer", "minimum": 0, "default": 0 }
            },
            "additionalProperties": false
        }
    })
}
