"""
This file contains static variables like paths or constants which are referenced from multiple
places in the code.
"""
import os
from pathlib import Path

# Directories
project_root_path = Path(os.path.dirname(__file__)).parents[1]

static_data_root_path = os.path.join(project_root_path, "resources")

# Files
default_config_file = os.path.join(static_data_root_path, "default.cfg")

# Test data
test_root_path = os.path.join(project_root_path, "tests")

test_data_root_path = os.path.join(test_root_path, "resources")

test_golden_descriptor_file = os.path.join(test_data_root_path, "cae32_golden_descriptor.npy")

# Constants
PATCH_SIZE = 32
PATCH_CHANNELS = 4
PATCH_VALUES = PATCH_CHANNELS * PATCH_SIZE * PATCH_SIZE

STAGE_LABELS = ["scene sampling", "descriptor regression", "k-NN & voting", "vote filtering",
                "verification"]
