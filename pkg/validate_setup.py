#!/usr/bin/env python3
"""
Basic validation script for the Fast Conformer toolkit
Checks repository layout and config files without importing numpy or loguru.
"""
import json
import sys
from pathlib import Path

ROOT = Path(__file__).parent


def test_project_structure():
    """Test that all required files and directories exist."""
    print("🔍 Testing project structure...")

    required_files = [
        'README.md',
        '.gitignore',
        'requirements.txt',
        'main.py',
        'demo.py',
        'config/toolkit_config.json',
        'config/encoder.example.json',
        'docs/RUNBOOK.md',
    ]

    required_dirs = [
        'src/',
        'src/tensor/',
        'src/attention/',
        'src/encoder/',
        'src/profiler/',
        'src/longform/',
        'src/cli/',
        'src/utils/',
        'tests/',
        'config/',
        'docs/'
    ]

    for file_path in required_files:
        if not (ROOT / file_path).exists():
            raise FileNotFoundError(f"Required file missing: {file_path}")
        print(f"  ✓ {file_path}")

    for dir_path in required_dirs:
        if not (ROOT / dir_path).exists():
            raise FileNotFoundError(f"Required directory missing: {dir_path}")
        print(f"  ✓ {dir_path}")

    print("✅ Project structure is complete")


def test_config_files():
    """Test configuration files are valid JSON with the expected sections."""
    print("\n🔍 Testing configuration files...")

    with open(ROOT / 'config/toolkit_config.json', 'r') as f:
        config = json.load(f)
    assert isinstance(config, dict), "toolkit_config.json must be a JSON object"
    for section in ['profiling', 'memory', 'longform', 'equivalence', 'logging']:
        assert section in config, f"Missing required section: {section}"
        print(f"  ✓ Has {section} section")

    with open(ROOT / 'config/encoder.example.json', 'r') as f:
        encoder = json.load(f)
    for key in ['subsampling', 'n_layers', 'd_model', 'n_heads', 'conv_kernel', 'attention', 'feature_dim']:
        assert key in encoder, f"encoder.example.json is missing {key}"
    assert encoder['d_model'] % encoder['n_heads'] == 0, "d_model must divide evenly into heads"
    stages = encoder['subsampling']['stages']
    assert stages, "subsampling needs at least one stage"
    assert all(stage['stride'] == 2 for stage in stages), "every subsampling stage must have stride 2"
    print(f"  ✓ encoder.example.json: {len(stages)} stages, {encoder['n_layers']} layers, d_model {encoder['d_model']}")

    print("✅ Configuration files are valid")


def test_documentation():
    """Test documentation files exist and have content."""
    print("\n🔍 Testing documentation...")

    readme_content = (ROOT / 'README.md').read_text()
    assert 'Fast Conformer' in readme_content
    assert 'Installation' in readme_content
    assert 'Usage' in readme_content
    print("  ✓ README.md has required sections")

    runbook_content = (ROOT / 'docs/RUNBOOK.md').read_text()
    assert 'Prerequisites' in runbook_content
    assert 'Operating Modes' in runbook_content
    assert 'Troubleshooting' in runbook_content
    print("  ✓ RUNBOOK.md has required sections")

    print("✅ Documentation is complete")


def test_gitignore():
    """Test .gitignore covers generated files."""
    print("\n🔍 Testing .gitignore...")

    content = (ROOT / '.gitignore').read_text()
    for ignore_pattern in ['__pycache__', '*.log', '*.fcft', '*.fcwt']:
        assert ignore_pattern in content, f"Missing important ignore pattern: {ignore_pattern}"
        print(f"  ✓ Ignores {ignore_pattern}")

    print("✅ .gitignore is properly configured")


def main():
    """Run all validation tests."""
    print("🚀 Running Fast Conformer toolkit validation tests")
    print("=" * 60)

    try:
        test_project_structure()
        test_config_files()
        test_documentation()
        test_gitignore()

        print("\n🎉 All validation tests passed!")
        print("\nNext steps:")
        print("1. Install dependencies: pip install -r requirements.txt")
        print("2. Run: python demo.py")
        print("3. Run: python main.py profile --preset A4 --duration 30")

        return 0

    except Exception as e:
        print(f"\n❌ Validation failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
