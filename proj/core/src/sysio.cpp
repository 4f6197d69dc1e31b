#include "kc/sysio.hpp"

#include <fstream>
#include <sstream>

namespace kc {

namespace {

struct LineTokens {
  int line_no;
  std::vector<std::string> toks;
};

int64_t to_int(const LineTokens& lt, const std::string& tok) {
  try {
    size_t pos = 0;
    int64_t v = std::stoll(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(lt.line_no, "expected integer, got '" + tok + "'");
  }
}

Lit to_lit(const LineTokens& lt, const std::string& tok, uint32_t num_vars) {
  int64_t v = to_int(lt, tok);
  if (v == 0 || v > num_vars || -v > num_vars)
    throw ParseError(lt.line_no, "literal out of range: " + tok);
  return Lit(static_cast<int32_t>(v));
}

// Reads literals from toks[from..] up to the terminating "0".
std::vector<Lit> read_lits(const LineTokens& lt, size_t from, uint32_t num_vars) {
  std::vector<Lit> lits;
  size_t i = from;
  for (; i < lt.toks.size(); ++i) {
    if (lt.toks[i] == "0") break;
    lits.push_back(to_lit(lt, lt.toks[i], num_vars));
  }
  if (i != lt.toks.size() - 1)
    throw ParseError(lt.line_no, "constraint line must end with a single 0");
  return lits;
}

std::vector<uint64_t> parse_hex_table(const LineTokens& lt, const std::string& hex,
                                      uint32_t arity) {
  const uint64_t bits = uint64_t{1} << arity;
  const size_t digits = std::max<uint64_t>(1, (bits + 3) / 4);
  if (hex.size() != digits)
    throw ParseError(lt.line_no, "truth table needs exactly " + std::to_string(digits) +
                                     " hex digits, got " + std::to_string(hex.size()));
  std::vector<uint64_t> words(std::max<uint64_t>(1, bits >> 6), 0);
  for (size_t d = 0; d < hex.size(); ++d) {
    char ch = hex[hex.size() - 1 - d];  // least significant digit last
    uint64_t nib;
    if (ch >= '0' && ch <= '9') nib = ch - '0';
    else if (ch >= 'a' && ch <= 'f') nib = 10 + (ch - 'a');
    else if (ch >= 'A' && ch <= 'F') nib = 10 + (ch - 'A');
    else throw ParseError(lt.line_no, "bad hex digit in truth table");
    const size_t bit0 = 4 * d;
    if (bit0 + 4 > bits && (nib >> (bit0 < bits ? bits - bit0 : 0)) != 0)
      throw ParseError(lt.line_no, "truth table overflows 2^arity bits");
    if (bit0 < bits) words[bit0 >> 6] |= nib << (bit0 & 63);
  }
  return words;
}

}  // namespace

ConstraintSystem parse_system(std::string_view text, const OpaqueRegistry* reg) {
  ConstraintSystem f;
  bool saw_header = false;
  size_t declared_cons = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    LineTokens lt{line_no, {}};
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) lt.toks.push_back(tok);
    if (lt.toks.empty() || lt.toks[0] == "c") continue;

    if (lt.toks[0] == "p") {
      if (saw_header) throw ParseError(line_no, "duplicate header");
      if (lt.toks.size() != 4 || lt.toks[1] != "csys")
        throw ParseError(line_no, "malformed header, want 'p csys <nvars> <ncons>'");
      int64_t nv = to_int(lt, lt.toks[2]);
      int64_t nc = to_int(lt, lt.toks[3]);
      if (nv < 0 || nc < 0) throw ParseError(line_no, "negative counts in header");
      f.num_vars = static_cast<uint32_t>(nv);
      declared_cons = static_cast<size_t>(nc);
      saw_header = true;
      continue;
    }
    if (!saw_header) throw ParseError(line_no, "constraint before 'p csys' header");

    try {
      const std::string& head = lt.toks[0];
      if (head == "x") {
        f.constraints.push_back(Constraint::xor_of(read_lits(lt, 1, f.num_vars), true));
      } else if (head == "d") {
        if (lt.toks.size() < 4) throw ParseError(line_no, "malformed sum-modulo line");
        int64_t m = to_int(lt, lt.toks[1]);
        int64_t r = to_int(lt, lt.toks[2]);
        if (m < 2) throw ParseError(line_no, "modulus must be >= 2");
        if (r < 0 || r >= m) throw ParseError(line_no, "residue must be in [0, modulus)");
        f.constraints.push_back(Constraint::sum_modulo(
            read_lits(lt, 3, f.num_vars), static_cast<uint32_t>(m), static_cast<uint32_t>(r)));
      } else if (head == "g") {
        if (lt.toks.size() < 3) throw ParseError(line_no, "malformed cardinality line");
        int64_t k = to_int(lt, lt.toks[1]);
        if (k < 0) throw ParseError(line_no, "cardinality bound must be >= 0");
        f.constraints.push_back(
            Constraint::cardinality(read_lits(lt, 2, f.num_vars), static_cast<uint32_t>(k)));
      } else if (head == "w") {
        if (lt.toks.size() < 3) throw ParseError(line_no, "malformed threshold line");
        int64_t theta = to_int(lt, lt.toks[1]);
        std::vector<int64_t> weights;
        std::vector<Lit> lits;
        size_t i = 2;
        for (; i + 1 < lt.toks.size() && lt.toks[i] != "0"; i += 2) {
          weights.push_back(to_int(lt, lt.toks[i]));
          lits.push_back(to_lit(lt, lt.toks[i + 1], f.num_vars));
        }
        if (i != lt.toks.size() - 1 || lt.toks[i] != "0")
          throw ParseError(line_no, "threshold line must end with 0");
        f.constraints.push_back(Constraint::threshold(std::move(lits), std::move(weights), theta));
      } else if (head == "f") {
        if (lt.toks.size() < 4) throw ParseError(line_no, "malformed small-scope line");
        int64_t arity = to_int(lt, lt.toks[1]);
        if (arity < 0 || arity > 20) throw ParseError(line_no, "small-scope arity must be in [0, 20]");
        auto table = parse_hex_table(lt, lt.toks[2], static_cast<uint32_t>(arity));
        std::vector<Var> vars;
        size_t i = 3;
        for (; i < lt.toks.size() && lt.toks[i] != "0"; ++i) {
          Lit l = to_lit(lt, lt.toks[i], f.num_vars);
          if (!l.positive()) throw ParseError(line_no, "small-scope vars must be positive");
          vars.push_back(l.var());
        }
        if (i != lt.toks.size() - 1) throw ParseError(line_no, "small-scope line must end with 0");
        if (vars.size() != static_cast<size_t>(arity))
          throw ParseError(line_no, "small-scope arity does not match variable count");
        f.constraints.push_back(Constraint::small_scope(std::move(vars), std::move(table)));
      } else if (head == "o") {
        if (lt.toks.size() < 3) throw ParseError(line_no, "malformed opaque line");
        if (lt.toks.back() != "0") throw ParseError(line_no, "opaque line must end with 0");
        const std::string& tag = lt.toks[1];
        if (!reg || !reg->factories.count(tag))
          throw ParseError(line_no, "unknown opaque constraint tag '" + tag + "'");
        std::vector<std::string> params(lt.toks.begin() + 2, lt.toks.end() - 1);
        auto oc = reg->factories.at(tag)(params);
        auto c = Constraint::opaque_of(std::move(oc));
        for (const Lit& l : c.lits)
          if (l.var() > f.num_vars) throw ParseError(line_no, "opaque scope variable out of range");
        f.constraints.push_back(std::move(c));
      } else {
        f.constraints.push_back(Constraint::clause(read_lits(lt, 0, f.num_vars)));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (!saw_header) throw ParseError(line_no, "missing 'p csys' header");
  if (f.constraints.size() != declared_cons)
    throw ParseError(line_no, "header declares " + std::to_string(declared_cons) +
                                  " constraints, file has " + std::to_string(f.constraints.size()));
  return f;
}

std::string serialize_system(const ConstraintSystem& f) {
  f.validate();
  std::ostringstream out;
  out << "p csys " << f.num_vars << ' ' << f.constraints.size() << '\n';
  for (const Constraint& c : f.constraints) {
    switch (c.kind) {
      case Kind::Clause:
        for (const Lit& l : c.lits) out << l.code << ' ';
        out << "0\n";
        break;
      case Kind::Xor: {
        if (c.lits.empty() && !c.xor_parity)
          throw Error("empty XOR with even parity is not representable in .csys");
        out << 'x';
        for (size_t i = 0; i < c.lits.size(); ++i) {
          int32_t code = c.lits[i].code;
          if (i == 0 && !c.xor_parity) code = -code;  // fold even parity into first literal
          out << ' ' << code;
        }
        out << " 0\n";
        break;
      }
      case Kind::SumModulo:
        out << "d " << c.modulus << ' ' << c.residue;
        for (const Lit& l : c.lits) out << ' ' << l.code;
        out << " 0\n";
        break;
      case Kind::Cardinality:
        out << "g " << c.card_bound;
        for (const Lit& l : c.lits) out << ' ' << l.code;
        out << " 0\n";
        break;
      case Kind::Threshold:
        out << "w " << c.threshold_bound;
        for (size_t i = 0; i < c.lits.size(); ++i)
          out << ' ' << c.weights[i] << ' ' << c.lits[i].code;
        out << " 0\n";
        break;
      case Kind::SmallScope: {
        const uint64_t bits = uint64_t{1} << c.arity();
        const size_t digits = std::max<uint64_t>(1, (bits + 3) / 4);
        std::string hex(digits, '0');
        for (size_t d = 0; d < digits; ++d) {
          const size_t bit0 = 4 * d;
          uint64_t nib = 0;
          if (bit0 < bits) nib = (c.table[bit0 >> 6] >> (bit0 & 63)) & 0xf;
          hex[digits - 1 - d] = "0123456789abcdef"[nib];
        }
        out << "f " << c.arity() << ' ' << hex;
        for (const Lit& l : c.lits) out << ' ' << l.var();
        out << " 0\n";
        break;
      }
      case Kind::Opaque: {
        out << "o " << c.opaque->tag();
        for (const std::string& p : c.opaque->params()) out << ' ' << p;
        out << " 0\n";
        break;
      }
    }
  }
  return out.str();
}

ConstraintSystem load_system(const std::string& path, const OpaqueRegistry* reg) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_system(buf.str(), reg);
}

void save_system(const ConstraintSystem& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << serialize_system(f);
}

}  // namespace kc
