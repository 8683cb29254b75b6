'''These are the names of the schemes, modes, task states and output columns
used throughout the package.
'''
class _BaseNameClass:
    def __iter__(self):
        a = vars(self).values()
        for b in a:
            yield b

    def __contains__(self, key):
        return key in vars(self).values()


class SchemeNamesClass(_BaseNameClass):
    '''Transmission schemes that can be simulated

    Names
    -----
    - COOPERATIVE: str
        - Sense-and-send protocol with U2U relaying, underlay and joint
          trajectory / radio resource optimization.
    - NONCOOPERATIVE: str
        - U2N only on orthogonal subchannels, with detours to communication points.
    - SEPARATE: str
        - Fly to the best sensing location, sense, then fly to the nearest
          communication point and upload. Sensing and transmission never overlap.
    '''
    def __init__(self):
        self.COOPERATIVE = 'cooperative'
        self.NONCOOPERATIVE = 'noncooperative'
        self.SEPARATE = 'separate'


class ModeNamesClass(_BaseNameClass):
    '''Transmission modes of a UAV in one slot

    Names
    -----
    - U2N: str
        - Direct uplink to the base station
    - U2U: str
        - Link to a relay UAV, which forwards the data over its own U2N link
    - IDLE: str
        - No link this slot (nothing to send, or deferred)
    '''
    def __init__(self):
        self.U2N = 'U2N'
        self.U2U = 'U2U'
        self.IDLE = 'idle'


class ColumnNamesClass(_BaseNameClass):
    '''Column names of the per-slot CSV and the aggregate table.

    Per-UAV columns are formed with `uav_column(uav_id, name)` and per-task
    columns with `task_column(task_id)`.
    '''
    def __init__(self):
        self.SLOT = 'slot'
        self.TIME = 'time'
        self.SUM_RATE = 'sum_rate'
        self.DELIVERED_BITS = 'delivered_bits'
        self.QOS_VIOLATIONS = 'qos_violations'
        self.TASKS_DELIVERED = 'tasks_delivered'

        # Per-UAV fields, in column order
        self.UAV_FIELDS = ('mode', 'relay', 'subchannels', 'power', 'sinr_db',
            'rate', 'x', 'y', 'z', 'speed', 'qos_violation')

        # Aggregate table
        self.SCHEME = 'scheme'
        self.N_SUBCHANNELS = 'n_subchannels'
        self.SEED = 'seed'
        self.N_RUNS = 'n_runs'
        self.MEAN_SUM_RATE = 'mean_sum_rate'
        self.COMPLETION_TIME = 'completion_time'
        self.BNB_NODES = 'bnb_nodes'
        self.DC_ITERATIONS = 'dc_iterations'
        self.DELIVERED_FRACTION = 'delivered_fraction'
        self.N_SLOTS = 'n_slots'
        self.FAILED = 'failed'

    def ci_columns(self, name: str) -> tuple:
        '''Lower and upper 95% interval columns of an aggregated metric'''
        return ('{}_ci_low'.format(name), '{}_ci_high'.format(name))

    def uav_column(self, uav_id: int, name: str) -> str:
        return 'uav{}_{}'.format(uav_id, name)

    def task_column(self, task_id: str) -> str:
        return 'task_{}_state'.format(task_id)


SCHEMES = SchemeNamesClass()
MODES = ModeNamesClass()
COLUMNS = ColumnNamesClass()

# Node id of the base station in gain tables and link records
BS = 'BS'

# File names
SLOTS_FILENAME = 'slots.csv'
SUMMARY_FILENAME = 'summary.csv'
AGGREGATE_FILENAME = 'aggregate.csv'
METADATA_FILENAME = 'metadata.txt'
SCENARIO_FILENAME = 'scenario.pkl'
SEARCH_TREE_DIRNAME = 'search_tree'
