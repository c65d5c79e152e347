from pathlib import Path

PROJECT_ROOT = Path(__file__).parent

DATA_DIR = PROJECT_ROOT / "data"
DEFAULT_SETTINGS = DATA_DIR / "comprehensive_settings.json"
USER_SETTINGS = DATA_DIR / "user_settings.json"
# hourly wave/wind/pressure readings used by the CSV examples and tests
BUOY_SAMPLE = DATA_DIR / "buoy_sample.csv"
