"""Validate that the environment can run the teleport-noise toolkit."""
import sys
from pathlib import Path

# Run from a source checkout without installing
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))


def validate_environment():
    """Run validation checks on the environment."""
    print("=" * 60)
    print("ENVIRONMENT VALIDATION")
    print("=" * 60)

    checks_passed = 0
    checks_failed = 0

    # Check 1: Python version
    print("\n[1] Checking Python version...")
    if sys.version_info >= (3, 10):
        version = sys.version_info
        print(f"   ✓ Python {version.major}.{version.minor}.{version.micro}")
        checks_passed += 1
    else:
        print(f"   ✗ Python version too old: {sys.version_info}")
        checks_failed += 1

    # Check 2: Required packages
    print("\n[2] Checking required packages...")
    required_packages = [
        "numpy",
        "pandas",
        "pydantic",
        "pydantic_settings",
        "dotenv",
        "tqdm",
        "rich",
        "click",
        "loguru",
        "pytest",
    ]

    for package in required_packages:
        try:
            __import__(package)
            print(f"   ✓ {package}")
            checks_passed += 1
        except ImportError:
            print(f"   ✗ {package} not installed")
            checks_failed += 1

    # Check 3: Project structure
    print("\n[3] Checking project structure...")
    required_dirs = [
        "teleport_noise/config",
        "teleport_noise/core",
        "teleport_noise/utils",
        "teleport_noise/cli",
        "tests/unit",
    ]

    for dir_path in required_dirs:
        if Path(dir_path).exists():
            print(f"   ✓ {dir_path}/")
            checks_passed += 1
        else:
            print(f"   ✗ {dir_path}/ missing")
            checks_failed += 1

    # Check 4: Configuration files
    print("\n[4] Checking configuration files...")
    for file_path in ["requirements.txt", "setup.py", "pyproject.toml", "README.md"]:
        if Path(file_path).exists():
            print(f"   ✓ {file_path}")
            checks_passed += 1
        else:
            print(f"   ✗ {file_path} missing")
            checks_failed += 1
    if not Path(".env").exists():
        print("   ⚠ .env not found (defaults and TELEPORT_NOISE_* variables apply)")

    # Check 5: Settings
    print("\n[5] Checking settings...")
    try:
        from teleport_noise.config.settings import settings

        print(f"   ✓ Log level: {settings.log_level}")
        print(f"   ✓ Purity tolerance: {settings.purity_tol:g}")
        print(f"   ✓ Dense simulator qubit cap: {settings.densesim_max_qubits}")
        checks_passed += 1
    except Exception as e:
        print(f"   ✗ Error loading settings: {e}")
        checks_failed += 1

    # Check 6: Smoke computations
    print("\n[6] Running smoke computations...")
    try:
        from teleport_noise.core.chain import ChainSpec, exact_infidelity_series
        from teleport_noise.core.ptm import ptm_from_kraus, rot_z
        from teleport_noise.core.threshold import threshold_lower_bound

        p_th = threshold_lower_bound(6)
        if abs(p_th - 0.01) < 1e-15:
            print(f"   ✓ Threshold bound for B=6: {p_th:g}")
            checks_passed += 1
        else:
            print(f"   ✗ Threshold bound for B=6 is {p_th:g}, expected 0.01")
            checks_failed += 1

        spec = ChainSpec.homogeneous(ptm_from_kraus(rot_z(0.05)), 4)
        series = exact_infidelity_series(spec)
        print(f"   ✓ Exact chain infidelity at t=4: {series[-1]:.6g}")
        checks_passed += 1
    except Exception as e:
        print(f"   ✗ Smoke computation failed: {e}")
        checks_failed += 1

    # Summary
    print("\n" + "=" * 60)
    print("SUMMARY")
    print("=" * 60)
    print(f"Checks passed: {checks_passed}")
    print(f"Checks failed: {checks_failed}")

    if checks_failed == 0:
        print("\n✓ Environment is properly configured!")
        print("\nNext steps:")
        print("1. Run the test suite: pytest")
        print("2. Try: teleport-noise threshold --B 6")
        return True
    else:
        print(f"\n✗ Please fix {checks_failed} failed check(s) before proceeding")
        return False


if __name__ == "__main__":
    success = validate_environment()
    sys.exit(0 if success else 1)
