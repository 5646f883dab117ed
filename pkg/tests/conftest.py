import os

os.environ.setdefault("ZENML_ANALYTICS_OPT_IN", "false")

from zenml.utils import source_utils  # noqa: E402

# steps are resolved from the repository root, not from the pytest rootdir
source_utils.set_custom_source_root(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
