import csv
import io

import pytest
from django.core.management import call_command


def parse_output(text):
    """(comment lines, header, data rows) of a command's CSV output."""
    lines = text.splitlines()
    comments = [line for line in lines if line.startswith('#')]
    body = [line for line in lines if not line.startswith('#')]
    rows = list(csv.reader(body))
    return comments, rows[0], rows[1:]


@pytest.fixture
def run_command():
    def run(name, *args):
        stdout = io.StringIO()
        call_command(name, *args, stdout=stdout, stderr=io.StringIO())
        return stdout.getvalue()

    return run


@pytest.fixture
def parse_csv():
    return parse_output
