#!/usr/bin/env python3
"""
Setup script for the BFL scheduling simulator
Installs dependencies and checks the bundled configs
"""

import subprocess
import sys
import os
from pathlib import Path


def print_header(text):
    """Print formatted header."""
    print("\n" + "=" * 70)
    print(f"  {text}")
    print("=" * 70)


def run_command(command, description):
    """Run shell command with status output."""
    print(f"\n> {description}...")
    try:
        subprocess.run(command, check=True, shell=True)
        print(f"OK   {description}")
        return True
    except subprocess.CalledProcessError as e:
        print(f"FAIL {description}")
        print(f"     Error: {e}")
        return False


def main():
    """Main setup function."""
    print_header("BFL SCHEDULING SIMULATOR - SETUP")

    project_root = Path(__file__).parent
    os.chdir(project_root)
    print(f"\nProject directory: {project_root}")

    print_header("Step 1: Installing Python Dependencies")
    deps_ok = run_command(f"{sys.executable} -m pip install -r requirements.txt", "Installing requirements")

    print_header("Step 2: Validating Config Files")
    configs_ok = True
    for cfg in sorted((project_root / "config").glob("*.cfg")):
        configs_ok &= run_command(f"{sys.executable} backend/main.py validate --config {cfg}",
                                  f"Validating {cfg.name}")

    print_header("Setup Summary")
    print(f"\n{'OK  ' if deps_ok else 'FAIL'} Python dependencies")
    print(f"{'OK  ' if configs_ok else 'FAIL'} Config files")

    print_header("Next Steps")
    print("\n1. Run one simulation:")
    print("   $ python backend/main.py run --config config/desk.cfg --policy dracs --rounds 200")
    print("\n2. Sweep V and policies:")
    print("   $ python backend/main.py sweep --config config/desk.cfg --policy dracs cs ec sa --v 1000 10000 --xlsx")
    print("\n3. Run the tests (add -m slow for the long acceptance runs):")
    print("   $ pytest")
    print("\n" + "=" * 70 + "\n")


if __name__ == "__main__":
    main()
