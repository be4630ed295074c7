
#-------------------- PLS Estimation --------------------#

MAX_ITERATIONS = 300
TOLERANCE = 1e-7
# a regressor block with reciprocal condition number below this is treated as singular
SINGULAR_RCOND = 1e-12

#-------------------- Bootstrap --------------------#

BOOTSTRAP_REPS = 5000
SIGNIFICANCE_ALPHA = 0.05
CONFIDENCE_LEVEL = 0.95
MAX_FAILED_FRACTION = 0.10
DEFAULT_SEED = 2021

#-------------------- Neural Network --------------------#

FOLDS = 10
EPOCHS = 2000
LEARNING_RATE = 0.1
RATE_GROWTH = 1.05
# minimum sample size as a multiple of the number of adjustable weights
SAMPLE_SIZE_FACTOR = 50
IMPORTANCE_METHODS = ("derivative", "garson")

#-------------------- Measurement Thresholds --------------------#

ALPHA_THRESHOLD = 0.7
CR_THRESHOLD = 0.7
AVE_THRESHOLD = 0.5
VIF_THRESHOLD = 5.0

STAR_LEVELS = [(0.001, "***"),
               (0.01, "**"),
               (0.05, "*"),
               ]

#-------------------- Model Spec --------------------#

SPEC_KEYS = {"top": {"constructs", "paths", "interactions", "bootstrap", "ann", "estimation"},
             "construct": {"name", "mode", "indicators", "components", "control"},
             "path": {"source", "target", "role"},
             "interaction": {"moderator", "focal", "target"},
             "bootstrap": {"reps", "seed", "alpha", "level"},
             "ann": {"target", "inputs", "hidden_nodes", "epochs", "learning_rate", "folds", "importance"},
             "estimation": {"max_iterations", "tolerance"},
             }

GENERATOR_KEYS = {"n", "loadings", "default_loading", "paths", "interactions",
                  "noise_sd", "disturbance_sd", "formative_correlation", "likert_levels"}

INTERACTION_SEPARATOR = " x "

#-------------------- File Naming --------------------#

TABLE_FILE_NAMES = {"reliability": "table1_reliability",
                    "cross_loadings": "table2_cross_loadings",
                    "formative_weights": "table3_formative_weights",
                    "structural": "table4_structural",
                    "indirect": "table5_indirect",
                    "ann_folds": "table6_ann_folds",
                    "sensitivity": "table7_sensitivity",
                    }

STAGE_ONE_TABLES = ["reliability", "cross_loadings", "formative_weights", "structural", "indirect"]
STAGE_TWO_TABLES = ["ann_folds", "sensitivity"]

META_FILE_NAME = "meta.json"
CSV_FLOAT_FORMAT = "%.6g"
TEXT_FLOAT_FORMAT = "{:.6g}"
REPORT_FORMATS = ("csv", "text")

REPLICA_SPEC_PATH = "data/replica_spec.json"
REPLICA_GENERATOR_PATH = "data/replica_generator.json"
REPLICA_SURVEY_PATH = "data/replica_survey.csv"

#-------------------- Exit Codes --------------------#

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4
