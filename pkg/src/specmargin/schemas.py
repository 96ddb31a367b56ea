"""Published JSON schemas for the tool's report formats.

Plain dict constants (draft-07 style) so downstream consumers can validate
without importing anything else from this package.  Non-finite floats are
serialized as null throughout, hence the ["number", "null"] unions.
"""

from __future__ import annotations

__all__ = ["BOUND_REPORT_V1", "PACBAYES_REPORT_V1"]

_NUM = {"type": ["number", "null"]}
_NUM_ARRAY = {"type": "array", "items": _NUM}
_INT = {"type": "integer"}
_BOOL = {"type": "boolean"}
_STR = {"type": "string"}

BOUND_REPORT_V1 = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "bound_report_v1",
    "type": "object",
    "required": [
        "schema",
        "config",
        "network",
        "data",
        "norms",
        "margins",
        "bounds",
        "theorem1_detail",
        "regime",
        "vc_conditions",
        "caveats",
    ],
    "properties": {
        "schema": {"const": "bound_report_v1"},
        "config": {
            "type": "object",
            "required": ["gamma", "delta", "m", "mode"],
            "properties": {
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "m": {"type": "integer", "minimum": 2},
                "mode": {"enum": ["capacity", "traceable"]},
            },
        },
        "network": {
            "type": "object",
            "required": ["depth", "width", "input_dim", "output_dim"],
            "properties": {
                "depth": {"type": "integer", "minimum": 1},
                "width": {"type": "integer", "minimum": 1},
                "input_dim": {"type": "integer", "minimum": 1},
                "output_dim": {"type": "integer", "minimum": 1},
            },
        },
        "data": {
            "type": "object",
            "required": ["size", "radius", "num_classes"],
            "properties": {
                "size": {"type": "integer", "minimum": 1},
                "radius": _NUM,
                "num_classes": {"type": "integer", "minimum": 1},
            },
        },
        "norms": {
            "type": "object",
            "required": [
                "spectral",
                "frobenius",
                "l1",
                "l21",
                "spectral_product",
                "beta",
                "frob_ratio_sum",
                "l1_ratio_term",
                "l21_ratio_term",
            ],
            "properties": {
                "spectral": _NUM_ARRAY,
                "frobenius": _NUM_ARRAY,
                "l1": _NUM_ARRAY,
                "l21": _NUM_ARRAY,
                "spectral_product": _NUM,
                "beta": _NUM,
                "frob_ratio_sum": _NUM,
                "l1_ratio_term": _NUM,
                "l21_ratio_term": _NUM,
            },
        },
        "margins": {
            "type": "object",
            "required": ["loss_at_gamma", "loss_at_zero", "min", "median", "max"],
            "properties": {
                "loss_at_gamma": {"type": "number", "minimum": 0, "maximum": 1},
                "loss_at_zero": {"type": "number", "minimum": 0, "maximum": 1},
                "min": _NUM,
                "median": _NUM,
                "max": _NUM,
            },
        },
        "bounds": {
            "type": "object",
            "required": ["theorem1", "bartlett_l1", "bartlett_l21", "vc"],
            "properties": {
                "theorem1": _NUM,
                "bartlett_l1": _NUM,
                "bartlett_l21": _NUM,
                "vc": _NUM,
            },
        },
        "theorem1_detail": {
            "type": "object",
            "required": ["mode", "margin_loss", "excess"],
            "properties": {
                "mode": {"enum": ["capacity", "traceable"]},
                "margin_loss": _NUM,
                "excess": _NUM,
                "capacity": _NUM,
                "ln_factor": _NUM,
                "beta": _NUM,
                "beta_tilde": _NUM,
                "sigma": _NUM,
                "kl": _NUM,
                "cover_size": _INT,
                "cover_size_nominal": _NUM,
            },
            "allOf": [
                {
                    "if": {"properties": {"mode": {"const": "traceable"}}},
                    "then": {"required": ["beta", "beta_tilde", "sigma", "kl", "cover_size"]},
                },
                {
                    "if": {"properties": {"mode": {"const": "capacity"}}},
                    "then": {"required": ["capacity", "ln_factor"]},
                },
            ],
        },
        "regime": {
            "type": "object",
            "required": ["comp_our", "comp_bar", "label"],
            "properties": {
                "comp_our": _NUM,
                "comp_bar": _NUM,
                "label": {"enum": ["theorem1-favored", "l1-favored", "similar"]},
            },
        },
        "vc_conditions": {
            "type": "object",
            "required": ["r_our", "r_bar"],
            "properties": {"r_our": _NUM, "r_bar": _NUM},
        },
        "caveats": {"type": "array", "items": _STR},
        "provenance": {"type": "object"},
        "manifest": {"type": "object"},
    },
}

PACBAYES_REPORT_V1 = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "pacbayes_report_v1",
    "type": "object",
    "required": ["schema", "config", "sigma", "lemma2", "recursion", "tail", "mc"],
    "properties": {
        "schema": {"const": "pacbayes_report_v1"},
        "config": {"type": "object"},
        "sigma": _NUM,
        "sigma_detail": {
            "type": "object",
            "required": ["source"],
            "properties": {
                "source": {"enum": ["proof", "given"]},
                "beta": _NUM,
                "beta_tilde": _NUM,
                "cover_size": _INT,
            },
        },
        "lemma2": {
            "type": "object",
            "required": ["trials", "clipped_trials", "failures", "all_hold", "per_trial"],
            "properties": {
                "trials": _INT,
                "clipped_trials": _INT,
                "failures": _INT,
                "all_hold": _BOOL,
                "per_trial": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": [
                            "sigma",
                            "w_spectral",
                            "u_spectral",
                            "admissible",
                            "observed_l2",
                            "observed_linf",
                            "bound",
                            "holds",
                        ],
                    },
                },
            },
        },
        "recursion": {
            "type": "object",
            "required": ["checks", "step_failures", "closed_failures", "all_hold", "per_check"],
            "properties": {
                "checks": _INT,
                "step_failures": _INT,
                "closed_failures": _INT,
                "all_hold": _BOOL,
                "per_check": {"type": "array"},
            },
        },
        "tail": {
            "anyOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["trials", "points", "all_ok"],
                    "properties": {
                        "trials": _INT,
                        "all_ok": _BOOL,
                        "points": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "required": ["t", "frequency", "bound", "stderr", "ok"],
                            },
                        },
                    },
                },
            ]
        },
        "mc": {
            "type": "object",
            "required": [
                "sigma",
                "gamma",
                "delta",
                "trials",
                "base_margin_loss",
                "base_zero_loss",
                "mean_perturbed_loss",
                "survival",
                "survival_stderr",
                "kl",
                "bound",
                "survival_ok",
            ],
        },
        "manifest": {"type": "object"},
    },
}
