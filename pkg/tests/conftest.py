from hypothesis import settings

# simulation-backed properties are slow per example; keep runs reproducible
settings.register_profile("repo", deadline=None, derandomize=True, print_blob=True)
settings.load_profile("repo")
