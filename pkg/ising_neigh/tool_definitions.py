"""
Tool definitions - only basic metadata.

Schemas are generated from the handler signatures.
"""

TOOL_DEFINITIONS = [
    {
        "name": "info",
        "function": "info",
        "description": "Get information about the ising-neigh package",
        "category": "meta",
        "module": "handlers.estimators",
    },
    {
        "name": "run_example",
        "function": "run_example",
        "description": (
            "Run a bundled experiment (fig2_variance, fig3_riskratio, "
            "fig4_on_discovery, fig5_ini_discovery, fig6_oracle_vs_truth, "
            "fig7_8_select_cut, fig9_efficient, variance_coverage, "
            "reduction_sandwich)"
        ),
        "category": "examples",
        "module": "handlers.estimators",
    },
    {
        "name": "model_summary",
        "function": "model_summary",
        "description": (
            "Interaction range, derived constants and true neighborhoods of a model"
        ),
        "category": "model",
        "module": "handlers.estimators",
    },
    {
        "name": "simulate",
        "function": "simulate",
        "description": "Draw samples from a model with the exact or Gibbs sampler",
        "category": "model",
        "module": "handlers.estimators",
    },
    {
        "name": "select",
        "function": "select",
        "description": (
            "Penalized selection of a conditioning set, "
            "slope-calibrated unless C is given"
        ),
        "category": "estimation",
        "module": "handlers.estimators",
    },
    {
        "name": "cut",
        "function": "cut",
        "description": (
            "Drop candidate sites whose empirical omega is below the cut threshold"
        ),
        "category": "estimation",
        "module": "handlers.estimators",
    },
    {
        "name": "reduce",
        "function": "reduce",
        "description": "Screen sites by empirical pair correlation with the target",
        "category": "estimation",
        "module": "handlers.estimators",
    },
    {
        "name": "estimate",
        "function": "estimate",
        "description": (
            "Estimate the interaction neighborhood of a site (select-cut or efficient)"
        ),
        "category": "estimation",
        "module": "handlers.estimators",
    },
    {
        "name": "run_experiment",
        "function": "run_experiment",
        "description": "Run a simulation scenario and return per sample size means",
        "category": "experiment",
        "module": "handlers.estimators",
    },
]
