#include "mandet/conic.hpp"

#include "mandet/errors.hpp"

#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace mandet::conic {

namespace {

char block_code(ConeKind kind) {
    switch (kind) {
        case ConeKind::Free: return 'F';
        case ConeKind::NonNeg: return 'L';
        case ConeKind::SecondOrder: return 'Q';
    }
    return '?';
}

// Reads whitespace-separated tokens, skipping '#' comments, tracking lines.
class Tokens {
public:
    explicit Tokens(std::istream& in) : in_(in) {}

    std::string next(const char* what) {
        while (true) {
            std::string tok;
            if (line_stream_ >> tok) {
                if (tok[0] == '#') {
                    line_stream_.setstate(std::ios::eofbit);
                    continue;
                }
                return tok;
            }
            std::string line;
            if (!std::getline(in_, line)) fail(std::string("unexpected end of input, expected ") + what);
            ++line_;
            line_stream_.clear();
            line_stream_.str(line);
        }
    }

    void expect(const std::string& keyword) {
        const std::string tok = next(keyword.c_str());
        if (tok != keyword) fail("expected '" + keyword + "', found '" + tok + "'");
    }

    long integer(const char* what) {
        const std::string tok = next(what);
        try {
            std::size_t pos = 0;
            const long v = std::stol(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            fail(std::string("bad integer for ") + what + ": '" + tok + "'");
        }
    }

    double real(const char* what) {
        const std::string tok = next(what);
        try {
            std::size_t pos = 0;
            const double v = std::stod(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            fail(std::string("bad number for ") + what + ": '" + tok + "'");
        }
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw InputError("line " + std::to_string(line_) + ": " + msg);
    }

private:
    std::istream& in_;
    std::istringstream line_stream_;
    int line_ = 0;
};

void write_vector(std::ostream& out, const char* name, const Eigen::VectorXd& v) {
    out << name << ' ' << v.size();
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v[i];
    out << '\n';
}

Eigen::VectorXd read_vector(Tokens& tok, const char* name) {
    tok.expect(name);
    const long n = tok.integer(name);
    if (n < 0) tok.fail(std::string("negative length for ") + name);
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v[i] = tok.real(name);
    return v;
}

}  // namespace

void write_program(std::ostream& out, const ConicProgram& program) {
    const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
    out << "conic_program 1\n";
    out << "vars " << program.num_vars() << " rows " << program.num_rows() << '\n';
    out << "blocks " << program.blocks.size() << '\n';
    for (const auto& block : program.blocks) out << block_code(block.kind) << ' ' << block.dim << '\n';
    write_vector(out, "c", program.c);
    write_vector(out, "b", program.b);
    out << "A " << program.A.nonZeros() << '\n';
    for (int j = 0; j < program.A.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(program.A, j); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    out << "end\n";
    out.precision(old_precision);
}

ConicProgram read_program(std::istream& in) {
    Tokens tok(in);
    tok.expect("conic_program");
    if (tok.integer("format version") != 1) tok.fail("unsupported format version");
    tok.expect("vars");
    const long n = tok.integer("vars");
    tok.expect("rows");
    const long m = tok.integer("rows");
    if (n < 0 || m < 0) tok.fail("negative dimensions");
    tok.expect("blocks");
    const long nb = tok.integer("blocks");
    ConicProgram p;
    long total = 0;
    for (long k = 0; k < nb; ++k) {
        const std::string code = tok.next("block kind");
        ConeBlock block;
        if (code == "F")
            block.kind = ConeKind::Free;
        else if (code == "L")
            block.kind = ConeKind::NonNeg;
        else if (code == "Q")
            block.kind = ConeKind::SecondOrder;
        else
            tok.fail("unknown block kind '" + code + "'");
        block.dim = static_cast<int>(tok.integer("block dim"));
        total += block.dim;
        p.blocks.push_back(block);
    }
    if (total != n) tok.fail("block dimensions do not sum to vars");
    p.c = read_vector(tok, "c");
    p.b = read_vector(tok, "b");
    if (p.c.size() != n) tok.fail("c length differs from vars");
    if (p.b.size() != m) tok.fail("b length differs from rows");
    tok.expect("A");
    const long nnz = tok.integer("A nnz");
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(std::max(nnz, 0L)));
    for (long k = 0; k < nnz; ++k) {
        const long r = tok.integer("row");
        const long c = tok.integer("col");
        const double v = tok.real("value");
        if (r < 0 || r >= m || c < 0 || c >= n) tok.fail("triplet index out of range");
        t.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    }
    tok.expect("end");
    p.A.resize(static_cast<int>(m), static_cast<int>(n));
    p.A.setFromTriplets(t.begin(), t.end());
    p.A.makeCompressed();
    p.validate();
    return p;
}

void write_solution(std::ostream& out, const ConicSolution& s) {
    const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
    out << "conic_solution 1\n";
    out << "status " << to_string(s.status) << '\n';
    out << "iterations " << s.iterations << '\n';
    out << "primal_obj " << s.primal_obj << '\n';
    out << "dual_obj " << s.dual_obj << '\n';
    out << "removed_rows " << s.removed_rows << '\n';
    out << "fixed_variables " << s.fixed_variables << '\n';
    write_vector(out, "x", s.x);
    write_vector(out, "y", s.y);
    write_vector(out, "z", s.z);
    write_vector(out, "certificate", s.certificate);
    out << "end\n";
    out.precision(old_precision);
}

ConicSolution read_solution(std::istream& in) {
    Tokens tok(in);
    tok.expect("conic_solution");
    if (tok.integer("format version") != 1) tok.fail("unsupported format version");
    ConicSolution s;
    tok.expect("status");
    try {
        s.status = parse_solve_status(tok.next("status"));
    } catch (const InputError& e) {
        tok.fail(e.what());
    }
    tok.expect("iterations");
    s.iterations = static_cast<int>(tok.integer("iterations"));
    tok.expect("primal_obj");
    s.primal_obj = tok.real("primal_obj");
    tok.expect("dual_obj");
    s.dual_obj = tok.real("dual_obj");
    tok.expect("removed_rows");
    s.removed_rows = static_cast<int>(tok.integer("removed_rows"));
    tok.expect("fixed_variables");
    s.fixed_variables = static_cast<int>(tok.integer("fixed_variables"));
    s.x = read_vector(tok, "x");
    s.y = read_vector(tok, "y");
    s.z = read_vector(tok, "z");
    s.certificate = read_vector(tok, "certificate");
    tok.expect("end");
    return s;
}

}  // namespace mandet::conic
