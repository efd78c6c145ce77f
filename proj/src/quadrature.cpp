#include "hho/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace hho {

namespace {

// Orbit of a fully symmetric triangle rule, barycentric coordinates:
//   S3  -> (1/3, 1/3, 1/3)
//   S21 -> (a, a, 1-2a) and permutations
//   S111-> (a, b, 1-a-b) and permutations
// Weights are per node, normalized to sum to one over the triangle.
enum class Orbit { s3, s21, s111 };
struct OrbitData {
  Orbit type;
  double a;
  double b;
  double w;
};

struct SymmetricRule {
  int degree;
  std::vector<OrbitData> orbits;
};

// Dunavant rules restricted to those with positive weights and interior
// points. Degrees 3, 7, 11, 15, 16 and 18 are served by the next rule up.
const std::vector<SymmetricRule>& dunavant_rules() {
  static const std::vector<SymmetricRule> rules = {
      {1, {{Orbit::s3, 0, 0, 1.0}}},
      {2, {{Orbit::s21, 1.0 / 6.0, 0, 1.0 / 3.0}}},
      {4,
       {{Orbit::s21, 0.44594849091596488631832925388305, 0, 0.22338158967801146569500700843312},
        {Orbit::s21, 0.09157621350977074345957146340220, 0, 0.10995174365532186763832632490021}}},
      {5,
       {{Orbit::s3, 0, 0, 0.225},
        {Orbit::s21, 0.47014206410511508977044120951345, 0, 0.13239415278850618073764938783315},
        {Orbit::s21, 0.10128650732345633880098736191512, 0, 0.12593918054482715259568394550018}}},
      {6,
       {{Orbit::s21, 0.24928674517091042129163855310702, 0, 0.11678627572637936602528961138558},
        {Orbit::s21, 0.06308901449150222834033160287082, 0, 0.05084490637020681692093680910686},
        {Orbit::s111, 0.31035245103378440541660773395655, 0.63650249912139864723014259441205,
         0.08285107561837357519355345642044}}},
      {8,
       {{Orbit::s3, 0, 0, 0.14431560767778716825109111048906},
        {Orbit::s21, 0.17056930775176020662229350149146, 0, 0.10321737053471825028179155029212},
        {Orbit::s21, 0.05054722831703097545842355059660, 0, 0.03245849762319808031092592834178},
        {Orbit::s21, 0.45929258829272315602881551449417, 0, 0.09509163426728462479389610438858},
        {Orbit::s111, 0.26311282963463811342178578628464, 0.72849239295540428124100037917606,
         0.02723031417443499426484469007390}}},
      {9,
       {{Orbit::s3, 0, 0, 0.09713579628279609890744676309485},
        {Orbit::s21, 0.48968251919873762778370692483619, 0, 0.03133470022713983234393199080984},
        {Orbit::s21, 0.43708959149293663726993036443535, 0, 0.07782754100477543338465495857972},
        {Orbit::s21, 0.18820353561903273024096128046733, 0, 0.07964773892720910288013526957424},
        {Orbit::s21, 0.04472951339445297061024247196780, 0, 0.02557767565869810438673914467637},
        {Orbit::s111, 0.22196298916076569567510252769319, 0.74119859878449802069007987352342,
         0.04328353937728937728937728937729}}},
      {10,
       {{Orbit::s3, 0, 0, 0.090817990382754},
        {Orbit::s21, 0.485577633383657, 0, 0.036725957756467},
        {Orbit::s21, 0.109481575485037, 0, 0.045321059435528},
        {Orbit::s111, 0.141707219414880, 0.307939838764121, 0.072757916845420},
        {Orbit::s111, 0.025003534762686, 0.246672560639903, 0.028327242531057},
        {Orbit::s111, 0.009540815400299, 0.066803251012200, 0.009421666963733}}},
      {12,
       {{Orbit::s21, 0.488217389773805, 0, 0.025731066440455},
        {Orbit::s21, 0.439724392294460, 0, 0.043692544538038},
        {Orbit::s21, 0.271210385012116, 0, 0.062858224217885},
        {Orbit::s21, 0.127576145541586, 0, 0.034796112930709},
        {Orbit::s21, 0.021317350453210, 0, 0.006166261051559},
        {Orbit::s111, 0.115343494534698, 0.275713269685514, 0.040371557766381},
        {Orbit::s111, 0.022838332222257, 0.281325580989940, 0.022356773202303},
        {Orbit::s111, 0.025734050548330, 0.116251915907597, 0.017316231108659}}},
      {13,
       {{Orbit::s3, 0, 0, 0.052520923400802},
        {Orbit::s21, 0.495048184939705, 0, 0.011280145209330},
        {Orbit::s21, 0.468716635109574, 0, 0.031423518362454},
        {Orbit::s21, 0.414521336801277, 0, 0.047072502504194},
        {Orbit::s21, 0.229399572042831, 0, 0.047363586536355},
        {Orbit::s21, 0.114424495196330, 0, 0.031167529045794},
        {Orbit::s21, 0.024811391363459, 0, 0.007975771465074},
        {Orbit::s111, 0.094853828379579, 0.268794997058761, 0.036848402728732},
        {Orbit::s111, 0.018100773278807, 0.291730066734288, 0.017401463303822},
        {Orbit::s111, 0.022233076674090, 0.126357385491669, 0.015521786839045}}},
      {14,
       {{Orbit::s21, 0.488963910362179, 0, 0.021883581369429},
        {Orbit::s21, 0.417644719340454, 0, 0.032788353544125},
        {Orbit::s21, 0.273477528308839, 0, 0.051774104507292},
        {Orbit::s21, 0.177205532412543, 0, 0.042162588736993},
        {Orbit::s21, 0.061799883090873, 0, 0.014433699669777},
        {Orbit::s21, 0.019390961248701, 0, 0.004923403602400},
        {Orbit::s111, 0.057124757403648, 0.172266687821356, 0.024665753212564},
        {Orbit::s111, 0.092916249356972, 0.336861459796345, 0.038571510787061},
        {Orbit::s111, 0.014646950055654, 0.298372882136258, 0.014436308113534},
        {Orbit::s111, 0.001268330932872, 0.118974497696957, 0.005010228838501}}},
      {17,
       {{Orbit::s3, 0, 0, 0.033437199290803},
        {Orbit::s21, 0.497170540556774, 0, 0.005093415440507},
        {Orbit::s21, 0.482176322624625, 0, 0.014670864527638},
        {Orbit::s21, 0.450239969020782, 0, 0.024350878353672},
        {Orbit::s21, 0.400266239377397, 0, 0.031107550868969},
        {Orbit::s21, 0.252141267970953, 0, 0.031257111218620},
        {Orbit::s21, 0.162047004658461, 0, 0.024815654339665},
        {Orbit::s21, 0.075875882260746, 0, 0.014056073070557},
        {Orbit::s21, 0.015654726967822, 0, 0.003194676173779},
        {Orbit::s111, 0.010186928826919, 0.334319867363658, 0.008119655318993},
        {Orbit::s111, 0.135440871671036, 0.292221537796944, 0.026805742283163},
        {Orbit::s111, 0.054423924290583, 0.319574885423190, 0.018459993210822},
        {Orbit::s111, 0.012868560833637, 0.190704224192292, 0.008476868534328},
        {Orbit::s111, 0.067165782413524, 0.180483211648746, 0.018292796770025},
        {Orbit::s111, 0.014663182224828, 0.080711313679564, 0.006665632004165}}},
      {19,
       {{Orbit::s3, 0, 0, 0.032906331388919},
        {Orbit::s21, 0.489609987073006, 0, 0.010330731891272},
        {Orbit::s21, 0.454536892697893, 0, 0.022387247263016},
        {Orbit::s21, 0.401416680649431, 0, 0.030266125869468},
        {Orbit::s21, 0.255551654403098, 0, 0.030490967802198},
        {Orbit::s21, 0.177077942152130, 0, 0.024159212741641},
        {Orbit::s21, 0.110061053227952, 0, 0.016050803586801},
        {Orbit::s21, 0.055528624251840, 0, 0.008084580261784},
        {Orbit::s21, 0.012621863777229, 0, 0.002079362027485},
        {Orbit::s111, 0.003611417848412, 0.395754787356943, 0.003884876904981},
        {Orbit::s111, 0.134466754530780, 0.307929983880436, 0.025574160612022},
        {Orbit::s111, 0.014446025776115, 0.264566948406520, 0.008880903573338},
        {Orbit::s111, 0.046933578838178, 0.358539352205951, 0.016124546761731},
        {Orbit::s111, 0.002861120350567, 0.157807405968595, 0.002491941817491},
        {Orbit::s111, 0.223861424097916, 0.075050596975911, 0.018242840118951},
        {Orbit::s111, 0.034647074816760, 0.142421601113383, 0.010258563736199},
        {Orbit::s111, 0.010161119296278, 0.065494628082938, 0.003799928855302}}},
  };
  return rules;
}

// Barycentric nodes (l1, l2, l3) and normalized weights.
struct BaryRule {
  std::vector<std::array<double, 3>> nodes;
  std::vector<double> weights;
  int degree = 0;
};

BaryRule expand(const SymmetricRule& rule) {
  BaryRule r;
  r.degree = rule.degree;
  for (const OrbitData& o : rule.orbits) {
    switch (o.type) {
      case Orbit::s3:
        r.nodes.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
        r.weights.push_back(o.w);
        break;
      case Orbit::s21: {
        const double c = 1.0 - 2.0 * o.a;
        for (const auto& n : {std::array{o.a, o.a, c}, std::array{o.a, c, o.a}, std::array{c, o.a, o.a}}) {
          r.nodes.push_back(n);
          r.weights.push_back(o.w);
        }
        break;
      }
      case Orbit::s111: {
        const double a = o.a, b = o.b, c = 1.0 - o.a - o.b;
        for (const auto& n : {std::array{a, b, c}, std::array{a, c, b}, std::array{b, a, c},
                              std::array{b, c, a}, std::array{c, a, b}, std::array{c, b, a}}) {
          r.nodes.push_back(n);
          r.weights.push_back(o.w);
        }
        break;
      }
    }
  }
  return r;
}

// Collapsed Gauss product rule: exact for degree <= 2n-2 polynomials with
// n points per direction (the Jacobian adds one degree in the collapsed one).
BaryRule collapsed_rule(int order) {
  const int n = order / 2 + 2;
  const auto gl = gauss_legendre(n);
  BaryRule r;
  r.degree = order;
  for (const auto& [su, wu] : gl) {
    const double u = 0.5 * (su + 1.0);
    for (const auto& [sv, wv] : gl) {
      const double v = 0.5 * (sv + 1.0);
      const double x = u, y = (1.0 - u) * v;
      r.nodes.push_back({1.0 - x - y, x, y});
      r.weights.push_back(0.25 * wu * wv * (1.0 - u) * 2.0);
    }
  }
  return r;
}

const BaryRule& bary_rule(int order) {
  if (order < 0) order = 0;
  if (order > max_quadrature_degree)
    throw QuadratureError("quadrature order " + std::to_string(order) + " beyond available rules");
  static const std::vector<BaryRule> cache = [] {
    std::vector<BaryRule> all;
    for (int p = 0; p <= max_quadrature_degree; ++p) {
      if (p <= max_symmetric_triangle_degree) {
        for (const auto& rule : dunavant_rules())
          if (rule.degree >= p) {
            all.push_back(expand(rule));
            break;
          }
      } else {
        all.push_back(collapsed_rule(p));
      }
    }
    return all;
  }();
  return cache[static_cast<std::size_t>(order)];
}

}  // namespace

std::vector<std::pair<double, double>> gauss_legendre(int npoints) {
  if (npoints < 1) throw QuadratureError("gauss_legendre: need at least one point");
  std::vector<std::pair<double, double>> rule(static_cast<std::size_t>(npoints));
  const int n = npoints;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule[static_cast<std::size_t>(i)] = {-x, w};
    rule[static_cast<std::size_t>(n - 1 - i)] = {x, w};
  }
  if (n % 2 == 1) rule[static_cast<std::size_t>(n / 2)].first = 0.0;
  return rule;
}

QuadRule reference_triangle_rule(int order) {
  return triangle_rule(Point(0, 0), Point(1, 0), Point(0, 1), order);
}

QuadRule triangle_rule(const Point& a, const Point& b, const Point& c, int order) {
  const BaryRule& br = bary_rule(order);
  const double area = 0.5 * std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
  QuadRule q;
  q.degree = br.degree;
  q.points.reserve(br.nodes.size());
  q.weights.reserve(br.nodes.size());
  for (std::size_t i = 0; i < br.nodes.size(); ++i) {
    const auto& l = br.nodes[i];
    q.points.push_back(l[0] * a + l[1] * b + l[2] * c);
    q.weights.push_back(br.weights[i] * area);
  }
  return q;
}

QuadRule cell_quadrature(const PolyMesh& mesh, std::size_t element, int order) {
  const Element& el = mesh.element(element);
  QuadRule q;
  q.degree = bary_rule(order).degree;
  for (const ElementFace& ef : el.faces) {
    const Face& f = mesh.face(ef.face);
    const Point& p0 = mesh.vertex(f.vertices[ef.orientation > 0 ? 0 : 1]);
    const Point& p1 = mesh.vertex(f.vertices[ef.orientation > 0 ? 1 : 0]);
    const QuadRule t = triangle_rule(el.centroid, p0, p1, order);
    q.points.insert(q.points.end(), t.points.begin(), t.points.end());
    q.weights.insert(q.weights.end(), t.weights.begin(), t.weights.end());
  }
  return q;
}

QuadRule face_quadrature(const PolyMesh& mesh, std::size_t face, int order) {
  if (order < 0) order = 0;
  if (order > max_quadrature_degree)
    throw QuadratureError("quadrature order " + std::to_string(order) + " beyond available rules");
  const Face& f = mesh.face(face);
  const int n = order / 2 + 1;
  const auto gl = gauss_legendre(n);
  QuadRule q;
  q.degree = 2 * n - 1;
  for (const auto& [s, w] : gl) {
    q.points.push_back(f.midpoint + 0.5 * s * f.length * f.tangent);
    q.weights.push_back(0.5 * w * f.length);
  }
  return q;
}

}  // namespace hho
