#!/usr/bin/env python3
# Copyright 2026 The ringattn Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""DIMACS front end for python-sat, with competition-style output."""

import sys

from pysat.formula import CNF
from pysat.solvers import Solver


def main():
    if len(sys.argv) != 2:
        print("usage: pysat_solve.py FILE.cnf", file=sys.stderr)
        return 1
    cnf = CNF(from_file=sys.argv[1])
    if any(len(c) == 0 for c in cnf.clauses):
        print("s UNSATISFIABLE")
        return 20
    with Solver(name="cadical195", bootstrap_with=cnf.clauses) as s:
        if not s.solve():
            print("s UNSATISFIABLE")
            return 20
        model = set(s.get_model())
    print("s SATISFIABLE")
    lits = [v if v in model else -v for v in range(1, cnf.nv + 1)]
    for k in range(0, len(lits), 20):
        print("v " + " ".join(map(str, lits[k:k + 20])))
    print("v 0")
    return 10


if __name__ == "__main__":
    sys.exit(main())
