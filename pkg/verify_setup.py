"""
Quick installation check: imports every module, runs a tiny free-wave
scenario and the identity battery on a handful of samples.
"""
import sys
import tempfile

print("1. Importing modules...")
try:
    import algebra
    import dynamics
    import egm
    import fields
    import lorentz
    import propagator
    from identities import check_identities
    from scenario import parse_scenario
    from simulator import run_scenario
    print("✅ All modules imported successfully.")
except Exception as e:
    print(f"❌ Import failed: {e}")
    sys.exit(1)

print("\n2. Identity battery...")
try:
    report = check_identities(seed=1, count=20)
    for line in report.lines():
        print(line)
    if not report.passed:
        raise RuntimeError(f"failing identities: {', '.join(report.failures)}")
    print("✅ Identities pass.")
except Exception as e:
    print(f"❌ Identity battery failed: {e}")
    sys.exit(1)

print("\n3. Tiny free-wave run...")
try:
    scenario = parse_scenario({
        'kind': 'free',
        'grid': {'n': 8, 'h': 0.785398163397448},
        'steps': 2,
        'fields': [{'tension': {'kind': 'circular_wave', 'amplitude': 1.0, 'mode': [1, 0, 0]}}],
    })
    with tempfile.TemporaryDirectory() as out:
        result = run_scenario(scenario, out)
        print(f"✅ {result.records} diagnostics records written.")
except Exception as e:
    print(f"❌ Run failed: {e}")
    sys.exit(1)

print("\n🎉 SYSTEM VERIFICATION PASSED")
