"""Error type shared by every module.

Each error carries a short upper-case code (``PARSE-ERROR``, ``BAD-WITNESS``
and so on) so the CLI can map failures to exit codes and reports.
"""


class CoalcanError(Exception):
    code = "ERROR"

    def __init__(self, code, message="", **info):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message
        self.info = info


# codes that signal a resource cap rather than a mathematical rejection
BUDGET_CODES = {"CAP-EXCEEDED", "BUDGET-EXCEEDED", "GRADE-OVERFLOW"}
