from hypothesis import settings

# fixed example sequence so the recorded test output is reproducible
settings.register_profile("repro", derandomize=True, print_blob=True)
settings.load_profile("repro")
